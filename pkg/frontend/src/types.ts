/** JSON shapes of the goldset HTTP API (/api/v1). The console performs no
 * metric computation: every number it displays comes from one of these
 * response fields. */

export interface ApiErrorBody {
  code: string;
  message: string;
}

export interface LabelTask {
  task_id: string;
  item_id: string;
  policy_id: string;
  policy_version: number;
  batch_id: string;
  status: 'pending' | 'labeled' | 'skipped';
  label: string | null;
  sme_id: string | null;
  idempotency_key: string | null;
  lease_until: number;
}

export interface BatchProgress {
  labeled: number;
  total: number;
  pending: number;
  skipped: number;
}

export interface BatchInfo {
  batch_id: string;
  selected: string[];
  mode: string;
  seed: number;
  policy_id: string;
  policy_version: number;
  created_at: string;
}

export interface BatchStatusResponse {
  batch: BatchInfo;
  progress: BatchProgress;
}

export interface NextTaskResponse {
  task: LabelTask;
  progress: BatchProgress;
}

export interface LabelResponse {
  task: LabelTask;
  progress: BatchProgress;
}

export interface VersionManifest {
  version_id: string;
  parent_id: string | null;
  policy_id: string;
  policy_version: number;
  item_count: number;
  created_at: string;
}

export interface CodeDistribution {
  probs: number[];
  support_count: number;
}

export interface VersionProfile {
  version_id: string;
  item_count: number;
  coverage: number;
  distribution: CodeDistribution | null;
  divergence_vs_production: { jsd: number; kl_p_m: number; kl_q_m: number } | null;
}

export interface SankeyDoc {
  nodes: { name: string }[];
  links: { source: number; target: number; value: number }[];
}

export interface DeltaResponse {
  old_version: number;
  new_version: number;
  old_labels: string[];
  new_labels: string[];
  counts: number[][];
  matched: number;
  unmatched_old: number;
  unmatched_new: number;
  sankey: SankeyDoc;
}

export interface ConfusionCounts {
  tp: number;
  fp: number;
  fn: number;
  tn: number;
}

/** Metric cells are null when the defining denominator is empty. */
export interface QualityReport {
  counts: ConfusionCounts;
  accuracy: number | null;
  precision: number | null;
  recall: number | null;
  f1: number | null;
  neg_precision: number | null;
  neg_recall: number | null;
  fpr: number | null;
  fnr: number | null;
  informedness: number | null;
  markedness: number | null;
  predicted_positive_fraction: number | null;
  positive_prevalence: number | null;
}

export interface AgentReportResponse {
  agent_id: string;
  gds: string;
  report: QualityReport;
  uncovered: number;
}

/** Percentage-point deltas per metric; null propagates from undefined cells. */
export type RelativeDeltas = Record<string, number | null>;

export const METRIC_NAMES = [
  'accuracy',
  'precision',
  'recall',
  'f1',
  'neg_precision',
  'neg_recall',
  'fpr',
  'fnr',
  'informedness',
  'markedness',
  'predicted_positive_fraction',
  'positive_prevalence',
] as const;

export type MetricName = (typeof METRIC_NAMES)[number];

/** Metrics where a decrease is an improvement. */
export const ERROR_METRICS: ReadonlySet<string> = new Set(['fpr', 'fnr']);
