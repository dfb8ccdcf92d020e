/** Action-aware diff between a parent theme set and its refined child.
 *
 * Pure function of (parent themes, child themes, action list):
 * - present in both (by id)      -> unchanged
 * - present in child only       -> added / split-child / combined,
 *                                  classified by the action that produced it
 * - present in parent only      -> deleted (covers Delete actions and the
 *                                  sources consumed by Split/Combine)
 * Child rows keep the child ordering; removed parent rows are appended.
 */

import type {
  DiffStatus,
  RefinementActionPayload,
  Theme,
  ThemeDiffRow,
} from './types';

function producedBy(
  id: string,
  actions: RefinementActionPayload[],
): DiffStatus {
  for (const action of actions) {
    if (!action.result_theme_ids.includes(id)) continue;
    switch (action.kind) {
      case 'split':
        return 'split-child';
      case 'combine':
        return 'combined';
      default:
        return 'added';
    }
  }
  return 'added';
}

export function computeDiff(
  parent: Theme[],
  child: Theme[],
  actions: RefinementActionPayload[],
): ThemeDiffRow[] {
  const parentIds = new Set(parent.map((t) => t.id));
  const childIds = new Set(child.map((t) => t.id));

  const rows: ThemeDiffRow[] = child.map((theme) => ({
    id: theme.id,
    name: theme.name,
    status: parentIds.has(theme.id)
      ? 'unchanged'
      : producedBy(theme.id, actions),
  }));
  for (const theme of parent) {
    if (!childIds.has(theme.id)) {
      rows.push({ id: theme.id, name: theme.name, status: 'deleted' });
    }
  }
  return rows;
}
