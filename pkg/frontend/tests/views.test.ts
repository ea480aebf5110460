import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { formatDeltaPp, formatMetric } from '../src/format.ts';
import {
  renderCoverageTrace,
  renderDelta,
  renderRelativeReport,
  renderSankey,
} from '../src/views.ts';
import type { DeltaResponse, QualityReport, RelativeDeltas } from '../src/types.ts';
import { METRIC_NAMES } from '../src/types.ts';

function fixture<T>(name: string): T {
  const path = join(__dirname, '..', 'fixtures', name);
  return JSON.parse(readFileSync(path, 'utf8')) as T;
}

interface RelativeFixture {
  report: QualityReport;
  relative: { deltas: RelativeDeltas };
}

describe('renderRelativeReport (recorded fixture)', () => {
  const { report, relative } = fixture<RelativeFixture>('relative-report.json');
  const table = renderRelativeReport(document, report, relative.deltas);

  it('shows every metric value straight from the response field', () => {
    const rows = [...table.querySelectorAll('tr')].slice(1);
    expect(rows).toHaveLength(METRIC_NAMES.length);
    for (const [index, name] of METRIC_NAMES.entries()) {
      const cells = rows[index]!.querySelectorAll('td');
      expect(cells[0]!.textContent).toBe(name);
      expect(cells[1]!.textContent).toBe(formatMetric(report[name]));
      expect(cells[2]!.textContent).toBe(formatDeltaPp(relative.deltas[name] ?? null));
    }
  });

  it('styles the recorded negative fpr delta as an improvement', () => {
    const fprRow = [...table.querySelectorAll('tr')][METRIC_NAMES.indexOf('fpr') + 1]!;
    expect(relative.deltas['fpr']).toBeLessThan(0);
    expect(fprRow.querySelector('td.delta')!.classList.contains('improvement')).toBe(true);
  });

  it('matches the snapshot', () => {
    expect(table.outerHTML).toMatchSnapshot();
  });

  it('renders undefined cells as em-dashes, never zeros', () => {
    const degenerate: QualityReport = {
      ...report,
      precision: null,
      f1: null,
    };
    const degenerateTable = renderRelativeReport(document, degenerate, null);
    const precisionRow =
      [...degenerateTable.querySelectorAll('tr')][METRIC_NAMES.indexOf('precision') + 1]!;
    expect(precisionRow.querySelectorAll('td')[1]!.textContent).toBe('—');
  });
});

describe('renderSankey (recorded fixture)', () => {
  const delta = fixture<DeltaResponse>('delta.json');

  it('renders one band per nonzero flow with values from the export', () => {
    const svg = renderSankey(document, delta.sankey);
    const bands = [...svg.querySelectorAll('path.sankey-link')];
    expect(bands).toHaveLength(delta.sankey.links.length);
    const total = bands.reduce(
      (sum, band) => sum + Number(band.getAttribute('data-value')),
      0,
    );
    expect(total).toBe(delta.matched);
  });

  it('labels all four version-qualified nodes', () => {
    const svg = renderSankey(document, delta.sankey);
    const labels = [...svg.querySelectorAll('text')].map((t) => t.textContent);
    expect(labels).toEqual(delta.sankey.nodes.map((n) => n.name));
  });

  it('renders a diagonal document without crossings', () => {
    const svg = renderSankey(document, {
      nodes: delta.sankey.nodes,
      links: [
        { source: 0, target: 2, value: 4 },
        { source: 1, target: 3, value: 4 },
      ],
    });
    expect(svg.getAttribute('data-crossings')).toBe('0');
  });
});

describe('renderDelta', () => {
  it('shows an empty-state placeholder when versions share no items', () => {
    const delta = fixture<DeltaResponse>('delta.json');
    const empty: DeltaResponse = {
      ...delta,
      matched: 0,
      counts: [[0, 0], [0, 0]],
      sankey: { nodes: delta.sankey.nodes, links: [] },
    };
    const view = renderDelta(document, empty);
    expect(view.querySelector('.empty-state')).not.toBeNull();
    expect(view.querySelector('svg.sankey')).toBeNull();
  });
});

describe('renderCoverageTrace (recorded fixture)', () => {
  it('draws a monotone non-decreasing line', () => {
    const { trace } = fixture<{ trace: number[] }>('coverage-trace.json');
    const svg = renderCoverageTrace(document, trace, 480, 160);
    const points = svg
      .querySelector('polyline')!
      .getAttribute('points')!
      .split(' ')
      .map((pair) => Number(pair.split(',')[1]));
    for (let i = 1; i < points.length; i += 1) {
      // svg y grows downward: non-decreasing coverage = non-increasing y
      expect(points[i]!).toBeLessThanOrEqual(points[i - 1]!);
    }
  });
});
