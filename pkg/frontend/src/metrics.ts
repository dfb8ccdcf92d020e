/** Client-side recomputation of the threshold metrics from a score grid.
 *
 * Must match the server exactly: the convention is `score >= theta`
 * ("met or exceeded"), jaccard is over all m*k cells, hit rate over rows.
 */

import type { HeatmapCell, HeatmapGrid } from './types';

function checkGrid(scores: number[][]): void {
  if (scores.length === 0 || scores[0].length === 0) {
    throw new Error('score grid must be non-empty');
  }
  const width = scores[0].length;
  for (const row of scores) {
    if (row.length !== width) {
      throw new Error('score grid must be rectangular');
    }
  }
}

function checkTheta(theta: number): void {
  if (!(theta > 0 && theta < 1)) {
    throw new Error('theta must be in the open interval (0, 1)');
  }
}

export function jaccard(scores: number[][], theta: number): number {
  checkGrid(scores);
  checkTheta(theta);
  let met = 0;
  let total = 0;
  for (const row of scores) {
    for (const s of row) {
      total += 1;
      if (s >= theta) met += 1;
    }
  }
  return met / total;
}

export function hitRate(scores: number[][], theta: number): number {
  checkGrid(scores);
  checkTheta(theta);
  let hitRows = 0;
  for (const row of scores) {
    if (row.some((s) => s >= theta)) hitRows += 1;
  }
  return hitRows / scores.length;
}

export function buildCells(grid: HeatmapGrid): HeatmapCell[] {
  const cells: HeatmapCell[] = [];
  grid.scores.forEach((row, i) => {
    row.forEach((score, j) => {
      cells.push({
        row: i,
        col: j,
        rowLabel: grid.row_labels[i],
        colLabel: grid.col_labels[j],
        score,
      });
    });
  });
  return cells;
}
