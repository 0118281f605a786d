import { colorOf } from "./colors.js";
import type { ViewState } from "./state.js";
import type { ModelPayload, SamplePayload } from "./types.js";
import { classIdOfItem, escapeHtml } from "./util.js";

export interface Point {
  x: number;
  y: number;
}

/**
 * Small deterministic force layout: nodes start on a circle in list
 * order, then a fixed number of repulsion + spring + centering steps.
 * No randomness, so the same sample always lands in the same place.
 */
export function layoutSample(
  sample: SamplePayload,
  width = 640,
  height = 420,
  iterations = 120,
): Record<string, Point> {
  const ids = sample.nodes;
  const index = new Map(ids.map((id, i) => [id, i]));
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 3;
  const xs = ids.map((_id, i) => cx + radius * Math.cos((2 * Math.PI * i) / Math.max(1, ids.length)));
  const ys = ids.map((_id, i) => cy + radius * Math.sin((2 * Math.PI * i) / Math.max(1, ids.length)));
  const springs = sample.links
    .map((link) => [index.get(link.source), index.get(link.target)] as const)
    .filter(([a, b]) => a !== undefined && b !== undefined) as [number, number][];

  const repulsion = 1800;
  const springLength = 70;
  const step = 0.08;
  for (let round = 0; round < iterations; round++) {
    const fx = new Array(ids.length).fill(0);
    const fy = new Array(ids.length).fill(0);
    for (let i = 0; i < ids.length; i++) {
      for (let j = i + 1; j < ids.length; j++) {
        let dx = xs[i] - xs[j];
        let dy = ys[i] - ys[j];
        const sq = dx * dx + dy * dy || 1;
        const push = repulsion / sq;
        const len = Math.sqrt(sq);
        dx /= len;
        dy /= len;
        fx[i] += dx * push;
        fy[i] += dy * push;
        fx[j] -= dx * push;
        fy[j] -= dy * push;
      }
    }
    for (const [a, b] of springs) {
      const dx = xs[b] - xs[a];
      const dy = ys[b] - ys[a];
      const len = Math.sqrt(dx * dx + dy * dy) || 1;
      const pull = (len - springLength) * 0.05;
      fx[a] += (dx / len) * pull;
      fy[a] += (dy / len) * pull;
      fx[b] -= (dx / len) * pull;
      fy[b] -= (dy / len) * pull;
    }
    for (let i = 0; i < ids.length; i++) {
      fx[i] += (cx - xs[i]) * 0.01;
      fy[i] += (cy - ys[i]) * 0.01;
      xs[i] = Math.min(width - 12, Math.max(12, xs[i] + fx[i] * step));
      ys[i] = Math.min(height - 12, Math.max(12, ys[i] + fy[i] * step));
    }
  }
  const out: Record<string, Point> = {};
  ids.forEach((id, i) => {
    out[id] = { x: Math.round(xs[i] * 100) / 100, y: Math.round(ys[i] * 100) / 100 };
  });
  return out;
}

/** Pure rendering of the sampled subgraph; labels appear on hover. */
export function renderSampleView(
  sample: SamplePayload,
  model: ModelPayload,
  state: ViewState,
  width = 640,
  height = 420,
): string {
  const at = layoutSample(sample, width, height);
  const byId = new Map(model.classes.map((entry) => [entry.id, entry]));
  const parts: string[] = [
    `<svg class="sample-view" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  for (const link of sample.links) {
    const a = at[link.source];
    const b = at[link.target];
    if (!a || !b) continue;
    const entry = byId.get(classIdOfItem(link.id));
    const color = entry ? colorOf(entry) : "#999";
    parts.push(
      `<line class="sample-link" data-item="${link.id}" x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" stroke="${color}" stroke-width="1.5"/>`,
    );
  }
  for (const nodeId of sample.nodes) {
    const p = at[nodeId];
    const entry = byId.get(classIdOfItem(nodeId));
    const color = entry ? colorOf(entry) : "#999";
    const selected = state.selectedItems.includes(nodeId);
    const stroke = selected ? ' stroke="#111" stroke-width="2.5"' : ' stroke="#fff"';
    // the <title> child is the hover label
    parts.push(
      `<g class="sample-node" data-item="${nodeId}"><circle cx="${p.x}" cy="${p.y}" r="7" fill="${color}"${stroke}>` +
        `<title>${escapeHtml(nodeId)}${entry ? ` · ${escapeHtml(entry.label)}` : ""}</title></circle>` +
        (selected
          ? `<text x="${p.x + 10}" y="${p.y + 4}" class="persistent-label">${escapeHtml(nodeId)}</text>`
          : "") +
        "</g>",
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}
