/** Similarity heatmap with a theta slider that recomputes metrics locally.
 *
 * The slider never re-calls the API: the returned score grid is the ground
 * truth and jaccard/hit rate are recomputed from it client-side with the
 * same >= convention the server uses.
 */

import { hitRate, jaccard } from './metrics';
import type { HeatmapGrid } from './types';

function cellColor(score: number): string {
  // white -> deep blue as score goes 0 -> 1
  const level = Math.round(255 - score * 160);
  return `rgb(${level}, ${level}, 255)`;
}

export function renderHeatmap(
  container: HTMLElement,
  grid: HeatmapGrid,
  initialTheta = 0.6,
): void {
  container.innerHTML = '';

  const readout = document.createElement('p');
  readout.className = 'heatmap-readout';

  const slider = document.createElement('input');
  slider.type = 'range';
  slider.min = '0.05';
  slider.max = '0.95';
  slider.step = '0.01';
  slider.value = String(initialTheta);

  const table = document.createElement('table');
  table.className = 'heatmap';
  const header = table.insertRow();
  header.insertCell();
  for (const label of grid.col_labels) {
    const th = document.createElement('th');
    th.textContent = label;
    header.appendChild(th);
  }
  const cells: { el: HTMLTableCellElement; score: number }[] = [];
  grid.scores.forEach((row, i) => {
    const tr = table.insertRow();
    const th = document.createElement('th');
    th.textContent = grid.row_labels[i];
    tr.appendChild(th);
    for (const score of row) {
      const td = tr.insertCell();
      td.textContent = score.toFixed(2);
      td.style.backgroundColor = cellColor(score);
      td.title = score.toString();
      cells.push({ el: td, score });
    }
  });

  const update = () => {
    const theta = Number(slider.value);
    readout.textContent =
      `θ = ${theta.toFixed(2)} · ` +
      `jaccard ${jaccard(grid.scores, theta).toFixed(3)} · ` +
      `hit rate ${hitRate(grid.scores, theta).toFixed(3)}`;
    for (const { el, score } of cells) {
      el.classList.toggle('hit', score >= theta);
    }
  };
  slider.addEventListener('input', update);
  update();

  container.append(slider, readout, table);
}
