/** Mirrors of the API JSON payloads plus the view models built from them. */

export type Phase =
  | 'configured'
  | 'chunked'
  | 'coded'
  | 'themes_generated'
  | 'evaluated'
  | 'refined'
  | 'awaiting_expert'
  | 'finalized';

export type CriterionKind =
  | 'coverage'
  | 'actionability'
  | 'distinctiveness'
  | 'relevance';

export interface Criterion {
  kind: CriterionKind;
  description: string;
  expert_examples: string[];
}

export interface StudyConfigPayload {
  background: string;
  goals: string;
  criteria?: Criterion[];
  chunk_word_limit?: number;
  similarity_threshold?: number;
  max_unattended_iterations?: number;
}

export interface SessionSummary {
  session_id: string;
  phase: Phase;
  iteration: number;
  current_theme_version: number | null;
  unattended_iterations: number;
  last_advisory: string;
  running: boolean;
  last_error: string | null;
  transcript_ids: string[];
  history_length: number;
  config: StudyConfigPayload & { criteria: Criterion[] };
}

export interface Theme {
  id: string;
  name: string;
  description: string;
  supporting_code_ids?: string[];
}

export interface ThemeSetPayload {
  version: number;
  themes: Theme[];
  produced_by: 'generation' | 'refinement' | 'human';
  parent_version?: number | null;
}

export type ActionKind = 'add' | 'split' | 'combine' | 'delete';

export interface RefinementActionPayload {
  kind: ActionKind;
  source_theme_ids: string[];
  result_theme_ids: string[];
  rationale?: string;
}

export interface HeatmapGrid {
  row_labels: string[];
  col_labels: string[];
  scores: number[][];
  comparison_basis?: string;
  embedding_model?: string;
}

export interface MetricsResponse {
  report: {
    theta: number;
    jaccard: number;
    hit_rate: number;
    hits: [string, string, number][];
    matrix: HeatmapGrid;
  };
  heatmap: HeatmapGrid;
}

export type DiffStatus =
  | 'unchanged'
  | 'added'
  | 'split-child'
  | 'combined'
  | 'deleted';

export interface ThemeDiffRow {
  id: string;
  name: string;
  status: DiffStatus;
}

export interface HeatmapCell {
  row: number;
  col: number;
  rowLabel: string;
  colLabel: string;
  score: number;
}
