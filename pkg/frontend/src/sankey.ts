import type { SankeyDoc } from './types.ts';

export interface SankeyNodeLayout {
  name: string;
  column: 0 | 1;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface SankeyLinkLayout {
  source: number;
  target: number;
  value: number;
  /** Band thickness, proportional to value. */
  thickness: number;
  sourceY: number; // vertical center of the band at the source node edge
  targetY: number; // vertical center of the band at the target node edge
}

export interface SankeyLayout {
  nodes: SankeyNodeLayout[];
  links: SankeyLinkLayout[];
  width: number;
  height: number;
}

export interface SankeyOptions {
  width?: number;
  height?: number;
  nodeWidth?: number;
  nodePadding?: number;
  /** Minimum node height so zero-flow labels stay visible. */
  minNodeHeight?: number;
}

/** Two-column flow layout for the export document: sources on the left,
 * targets on the right, link thickness proportional to value. Pure geometry
 * — values are passed through untouched. */
export function layoutSankey(doc: SankeyDoc, options: SankeyOptions = {}): SankeyLayout {
  const width = options.width ?? 640;
  const height = options.height ?? 360;
  const nodeWidth = options.nodeWidth ?? 16;
  const nodePadding = options.nodePadding ?? 12;
  const minNodeHeight = options.minNodeHeight ?? 4;

  const isTarget = new Set(doc.links.map((link) => link.target));
  // The export lists all source-side nodes before target-side nodes; for
  // documents with no links, fall back to that ordering contract.
  const columnOf = (index: number): 0 | 1 => {
    if (doc.links.length > 0) return isTarget.has(index) ? 1 : 0;
    return index < doc.nodes.length / 2 ? 0 : 1;
  };

  const flowThrough = doc.nodes.map((_, index) =>
    doc.links.reduce(
      (sum, link) =>
        link.source === index || link.target === index ? sum + link.value : sum,
      0,
    ),
  );
  const columnTotals: [number, number] = [0, 0];
  doc.nodes.forEach((_, index) => {
    columnTotals[columnOf(index)] += flowThrough[index] ?? 0;
  });
  const perColumnCount: [number, number] = [0, 0];
  doc.nodes.forEach((_, index) => {
    perColumnCount[columnOf(index)] += 1;
  });
  const scale = (column: 0 | 1): number => {
    const available =
      height - nodePadding * Math.max(perColumnCount[column] - 1, 0);
    const total = columnTotals[column];
    return total > 0 ? available / total : 0;
  };

  const nodes: SankeyNodeLayout[] = [];
  const cursor: [number, number] = [0, 0];
  doc.nodes.forEach((node, index) => {
    const column = columnOf(index);
    const nodeHeight = Math.max(
      (flowThrough[index] ?? 0) * scale(column),
      minNodeHeight,
    );
    nodes.push({
      name: node.name,
      column,
      x: column === 0 ? 0 : width - nodeWidth,
      y: cursor[column],
      width: nodeWidth,
      height: nodeHeight,
    });
    cursor[column] += nodeHeight + nodePadding;
  });

  // stack link bands within each node, in link order
  const sourceOffset = new Map<number, number>();
  const targetOffset = new Map<number, number>();
  const links: SankeyLinkLayout[] = doc.links.map((link) => {
    const sourceNode = nodes[link.source];
    const targetNode = nodes[link.target];
    if (sourceNode === undefined || targetNode === undefined) {
      throw new Error(`link references unknown node: ${link.source}->${link.target}`);
    }
    const thickness = link.value * scale(0);
    const sOff = sourceOffset.get(link.source) ?? 0;
    const tOff = targetOffset.get(link.target) ?? 0;
    sourceOffset.set(link.source, sOff + thickness);
    targetOffset.set(link.target, tOff + thickness);
    return {
      source: link.source,
      target: link.target,
      value: link.value,
      thickness,
      sourceY: sourceNode.y + sOff + thickness / 2,
      targetY: targetNode.y + tOff + thickness / 2,
    };
  });

  return { nodes, links, width, height };
}

/** Whether two laid-out bands cross between the columns. */
export function linksCross(a: SankeyLinkLayout, b: SankeyLinkLayout): boolean {
  const sourceOrder = Math.sign(a.sourceY - b.sourceY);
  const targetOrder = Math.sign(a.targetY - b.targetY);
  return sourceOrder !== 0 && targetOrder !== 0 && sourceOrder !== targetOrder;
}

export function crossingCount(layout: SankeyLayout): number {
  let crossings = 0;
  for (let i = 0; i < layout.links.length; i += 1) {
    for (let j = i + 1; j < layout.links.length; j += 1) {
      if (linksCross(layout.links[i]!, layout.links[j]!)) crossings += 1;
    }
  }
  return crossings;
}

/** SVG path for one band: a cubic ribbon between the node edges. */
export function linkPath(layout: SankeyLayout, link: SankeyLinkLayout): string {
  const sourceNode = layout.nodes[link.source]!;
  const targetNode = layout.nodes[link.target]!;
  const x0 = sourceNode.x + sourceNode.width;
  const x1 = targetNode.x;
  const mid = (x0 + x1) / 2;
  return `M ${x0} ${link.sourceY} C ${mid} ${link.sourceY}, ${mid} ${link.targetY}, ${x1} ${link.targetY}`;
}
