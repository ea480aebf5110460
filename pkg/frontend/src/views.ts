import { deltaStyling, formatCoverage, formatDeltaPp, formatMetric } from './format.ts';
import { crossingCount, layoutSankey, linkPath } from './sankey.ts';
import type { SankeyOptions } from './sankey.ts';
import type {
  DeltaResponse,
  QualityReport,
  RelativeDeltas,
  SankeyDoc,
  VersionProfile,
} from './types.ts';
import { METRIC_NAMES } from './types.ts';

const SVG_NS = 'http://www.w3.org/2000/svg';

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function emptyState(doc: Document, message: string): HTMLElement {
  return el(doc, 'p', 'empty-state', message);
}

/** Benchmark table: one row per metric, values straight from the report and
 * the server-computed pp deltas, cells classed by sign styling (negative
 * error-metric deltas are improvements). */
export function renderRelativeReport(
  doc: Document,
  report: QualityReport,
  deltas: RelativeDeltas | null,
): HTMLElement {
  const table = el(doc, 'table', 'relative-report');
  const head = el(doc, 'tr');
  for (const title of ['metric', 'value', 'delta vs baseline']) {
    head.appendChild(el(doc, 'th', undefined, title));
  }
  table.appendChild(head);
  for (const name of METRIC_NAMES) {
    const row = el(doc, 'tr');
    row.appendChild(el(doc, 'td', 'metric-name', name));
    row.appendChild(el(doc, 'td', 'metric-value', formatMetric(report[name])));
    const deltaPp = deltas === null ? null : (deltas[name] ?? null);
    const cell = el(doc, 'td', `delta ${deltaStyling(name, deltaPp)}`,
      deltas === null ? '' : formatDeltaPp(deltaPp));
    row.appendChild(cell);
    table.appendChild(row);
  }
  return table;
}

/** Monotone coverage-per-round polyline from an experiment trace. */
export function renderCoverageTrace(
  doc: Document,
  trace: number[],
  width = 480,
  height = 160,
): Element {
  const svg = doc.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
  svg.setAttribute('class', 'coverage-trace');
  if (trace.length === 0) {
    return svg;
  }
  const step = trace.length > 1 ? width / (trace.length - 1) : 0;
  const points = trace
    .map((coverage, round) => `${round * step},${height - coverage * height}`)
    .join(' ');
  const line = doc.createElementNS(SVG_NS, 'polyline');
  line.setAttribute('points', points);
  line.setAttribute('fill', 'none');
  line.setAttribute('class', 'trace-line');
  svg.appendChild(line);
  const label = doc.createElementNS(SVG_NS, 'text');
  label.setAttribute('x', '4');
  label.setAttribute('y', '14');
  label.textContent = formatCoverage(trace[trace.length - 1]!);
  svg.appendChild(label);
  return svg;
}

/** Sankey of label flow between versions, link widths proportional to the
 * exported values. */
export function renderSankey(
  doc: Document,
  sankeyDoc: SankeyDoc,
  options: SankeyOptions = {},
): Element {
  const layout = layoutSankey(sankeyDoc, options);
  const svg = doc.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute('class', 'sankey');
  svg.setAttribute('data-crossings', String(crossingCount(layout)));
  for (const link of layout.links) {
    const path = doc.createElementNS(SVG_NS, 'path');
    path.setAttribute('d', linkPath(layout, link));
    path.setAttribute('fill', 'none');
    path.setAttribute('stroke-width', String(link.thickness));
    path.setAttribute('class', 'sankey-link');
    path.setAttribute('data-value', String(link.value));
    svg.appendChild(path);
  }
  for (const node of layout.nodes) {
    const rect = doc.createElementNS(SVG_NS, 'rect');
    rect.setAttribute('x', String(node.x));
    rect.setAttribute('y', String(node.y));
    rect.setAttribute('width', String(node.width));
    rect.setAttribute('height', String(node.height));
    rect.setAttribute('class', 'sankey-node');
    svg.appendChild(rect);
    const text = doc.createElementNS(SVG_NS, 'text');
    text.setAttribute('x', String(node.column === 0 ? node.x + node.width + 4 : node.x - 4));
    text.setAttribute('y', String(node.y + node.height / 2));
    text.setAttribute('text-anchor', node.column === 0 ? 'start' : 'end');
    text.textContent = node.name;
    svg.appendChild(text);
  }
  return svg;
}

export function renderDelta(doc: Document, delta: DeltaResponse): HTMLElement {
  const container = el(doc, 'section', 'delta-view');
  container.appendChild(el(doc, 'h2', undefined,
    `v${delta.old_version} → v${delta.new_version}`));
  container.appendChild(el(doc, 'p', 'delta-summary',
    `${delta.matched} matched, ${delta.unmatched_old} only in old, ` +
    `${delta.unmatched_new} only in new`));
  if (delta.sankey.links.length === 0) {
    container.appendChild(emptyState(doc, 'no overlapping items between versions'));
  } else {
    container.appendChild(renderSankey(doc, delta.sankey));
  }
  return container;
}

export function renderProfile(doc: Document, profile: VersionProfile): HTMLElement {
  const container = el(doc, 'section', 'profile-view');
  container.appendChild(el(doc, 'h2', undefined, `version ${profile.version_id.slice(0, 12)}`));
  const list = el(doc, 'dl');
  const add = (term: string, value: string) => {
    list.appendChild(el(doc, 'dt', undefined, term));
    list.appendChild(el(doc, 'dd', undefined, value));
  };
  add('items', String(profile.item_count));
  add('coverage', formatCoverage(profile.coverage));
  if (profile.divergence_vs_production !== null) {
    add('JSD vs production', profile.divergence_vs_production.jsd.toFixed(4));
  }
  container.appendChild(list);
  return container;
}
