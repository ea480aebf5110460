import { ERROR_METRICS } from './types.ts';

export type DeltaStyling = 'improvement' | 'regression' | 'neutral' | 'undefined';

/** Sign styling for a percentage-point delta. For error metrics (fpr, fnr)
 * negative values indicate an improvement; for all other metrics positive
 * values do. */
export function deltaStyling(metric: string, deltaPp: number | null): DeltaStyling {
  if (deltaPp === null) return 'undefined';
  if (deltaPp === 0) return 'neutral';
  const improved = ERROR_METRICS.has(metric) ? deltaPp < 0 : deltaPp > 0;
  return improved ? 'improvement' : 'regression';
}

/** "+3.20 pp" / "-2.80 pp" / em-dash for undefined cells. */
export function formatDeltaPp(deltaPp: number | null): string {
  if (deltaPp === null) return '—';
  const sign = deltaPp > 0 ? '+' : '';
  return `${sign}${deltaPp.toFixed(2)} pp`;
}

/** Metric value as a percentage; em-dash for undefined cells. */
export function formatMetric(value: number | null): string {
  if (value === null) return '—';
  return `${(value * 100).toFixed(1)}%`;
}

export function formatCoverage(coverage: number): string {
  return `${(coverage * 100).toFixed(1)}% of 256 codes`;
}
