/** The four default evaluation criteria pre-filled in the setup form.
 *
 * Kept in sync with the server's bundled defaults; the setup form lets the
 * expert replace the wording and add examples before the session starts.
 */

import type { Criterion, CriterionKind, StudyConfigPayload } from './types';

export const CRITERION_KINDS: CriterionKind[] = [
  'coverage',
  'actionability',
  'distinctiveness',
  'relevance',
];

export const DEFAULT_CRITERIA: Criterion[] = [
  {
    kind: 'coverage',
    description:
      "The generated themes should comprehensively capture the key aspects " +
      "of parents' lived experiences while caring for children with AAOCA " +
      'from the transcripts.',
    expert_examples: [],
  },
  {
    kind: 'actionability',
    description:
      'Each theme should encapsulate a single concept that provides clear, ' +
      'specific, and meaningful insights. These insights should be ' +
      'actionable and useful for informing interventions, resources, or ' +
      'research.',
    expert_examples: [],
  },
  {
    kind: 'distinctiveness',
    description:
      'Each theme should be clearly distinct from one another, with no ' +
      'overlaps or redundancies.',
    expert_examples: [],
  },
  {
    kind: 'relevance',
    description:
      "Each theme should clearly reflect the parents' lived experiences, " +
      'concerns, and needs, without confusing or overlapping with themes ' +
      "related to the child/patient's feelings, concerns, or experiences.",
    expert_examples: [
      'Parent Outcomes refer to parents reporting feeling limited by their ' +
        "child's diagnosis, whereas Patient/Child Outcomes pertain to " +
        'parents perceiving that their child is limited by the diagnosis.',
      'Parent Outcomes: Parents report they feel limited by their ' +
        "child's diagnosis. Parents report they have PTSD from their " +
        "child's experience. Parents report being distressed by the " +
        'uncertainty of treatment choices. Parents report needing more ' +
        'social connections.',
      'Patient/Child Outcomes: Parents report they feel their child is ' +
        "limited by the child's diagnosis. Parents report their child has " +
        "PTSD from their child's experience. Parents report their child is " +
        'distressed by the uncertainty of treatment choices. Parents ' +
        'report their child needs more social connections.',
    ],
  },
];

/** Mirrors the server-side StudyConfig invariants; returns field -> message. */
export function validateConfig(
  config: StudyConfigPayload,
): Record<string, string> {
  const errors: Record<string, string> = {};
  if (!config.background.trim()) {
    errors.background = 'background is required';
  }
  if (!config.goals.trim()) {
    errors.goals = 'goals are required';
  }
  const criteria = config.criteria ?? [];
  const kinds = new Set(criteria.map((c) => c.kind));
  if (
    criteria.length !== 4 ||
    CRITERION_KINDS.some((k) => !kinds.has(k))
  ) {
    errors.criteria = 'exactly one criterion of each of the four kinds';
  }
  if (criteria.some((c) => !c.description.trim())) {
    errors.criteria = 'every criterion needs a description';
  }
  if (config.chunk_word_limit !== undefined && config.chunk_word_limit < 100) {
    errors.chunk_word_limit = 'chunk word limit must be at least 100';
  }
  if (
    config.similarity_threshold !== undefined &&
    !(config.similarity_threshold > 0 && config.similarity_threshold < 1)
  ) {
    errors.similarity_threshold = 'threshold must be between 0 and 1';
  }
  return errors;
}
