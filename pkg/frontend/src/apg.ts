/**
 * Client-side layered layout for the provenance graph JSON export.
 *
 * Nodes are assigned a column by longest path from any root (ignoring
 * edge direction semantics, using record order as a tiebreak), which
 * keeps the layout deterministic for a given graph.
 */

import type { ApgGraph } from "./types.js";

export interface LaidOutNode {
  nodeId: string;
  nodeType: string;
  recordSeq: number;
  x: number;
  y: number;
}

export interface LaidOutEdge {
  from: string;
  to: string;
  edgeType: string;
}

export interface Layout {
  nodes: LaidOutNode[];
  edges: LaidOutEdge[];
  width: number;
  height: number;
}

const COLUMN_W = 170;
const ROW_H = 64;
const MARGIN = 40;

export function layoutGraph(graph: ApgGraph): Layout {
  const order = [...graph.nodes].sort((a, b) => a.record_seq - b.record_seq);
  const layer = new Map<string, number>();
  for (const node of order) layer.set(node.node_id, 0);
  // longest-path layering over record order: a few passes suffice because
  // edges connect nearby records
  for (let pass = 0; pass < graph.nodes.length; pass++) {
    let changed = false;
    for (const edge of graph.edges) {
      const from = layer.get(edge.from) ?? 0;
      const to = layer.get(edge.to) ?? 0;
      // draw derives-from arrows back toward their source column
      const [src, dst] = edge.edge_type === "derives-from" ? [edge.to, edge.from] : [edge.from, edge.to];
      const srcLayer = layer.get(src) ?? 0;
      if ((layer.get(dst) ?? 0) < srcLayer + 1) {
        layer.set(dst, srcLayer + 1);
        changed = true;
      }
      void from;
      void to;
    }
    if (!changed) break;
  }
  const rows = new Map<number, number>();
  const nodes: LaidOutNode[] = order.map((node) => {
    const column = layer.get(node.node_id) ?? 0;
    const row = rows.get(column) ?? 0;
    rows.set(column, row + 1);
    return {
      nodeId: node.node_id,
      nodeType: node.node_type,
      recordSeq: node.record_seq,
      x: MARGIN + column * COLUMN_W,
      y: MARGIN + row * ROW_H,
    };
  });
  const width = MARGIN * 2 + (Math.max(0, ...[...rows.keys()]) + 1) * COLUMN_W;
  const height = MARGIN * 2 + Math.max(1, ...[...rows.values()]) * ROW_H;
  return {
    nodes,
    edges: graph.edges.map((e) => ({ from: e.from, to: e.to, edgeType: e.edge_type })),
    width,
    height,
  };
}

const TYPE_COLORS: Record<string, string> = {
  Prompt: "#7c6f64",
  Goal: "#2f6f4f",
  Plan: "#3a6ea5",
  Step: "#5b6ee1",
  ToolCall: "#b8860b",
  Decision: "#8250df",
  Escalation: "#c05621",
  Containment: "#b42318",
  Observation: "#0e7490",
  Outcome: "#1a7f37",
};

function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderSvg(graph: ApgGraph): string {
  const layout = layoutGraph(graph);
  const byId = new Map(layout.nodes.map((n) => [n.nodeId, n]));
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${layout.width} ${layout.height}" width="${layout.width}" height="${layout.height}">`,
    `<defs><marker id="arrow" markerWidth="8" markerHeight="8" refX="7" refY="3" orient="auto"><path d="M0,0 L7,3 L0,6 z" fill="#888"/></marker></defs>`,
  ];
  for (const edge of layout.edges) {
    const from = byId.get(edge.from);
    const to = byId.get(edge.to);
    if (!from || !to) continue;
    const x1 = from.x + 70;
    const y1 = from.y + 16;
    const x2 = to.x + 70;
    const y2 = to.y + 16;
    parts.push(
      `<line x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}" stroke="#888" stroke-width="1" marker-end="url(#arrow)"/>`,
      `<text x="${(x1 + x2) / 2}" y="${(y1 + y2) / 2 - 4}" font-size="9" fill="#666" text-anchor="middle">${escapeXml(edge.edgeType)}</text>`,
    );
  }
  for (const node of layout.nodes) {
    const color = TYPE_COLORS[node.nodeType] ?? "#444";
    parts.push(
      `<g data-node-id="${node.nodeId}">`,
      `<rect x="${node.x}" y="${node.y}" rx="6" width="140" height="32" fill="${color}" opacity="0.92"/>`,
      `<text x="${node.x + 70}" y="${node.y + 20}" font-size="11" fill="#fff" text-anchor="middle">${escapeXml(node.nodeType)}#${node.recordSeq}</text>`,
      `</g>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
