import { colorOf } from "./colors.js";
import type { ViewState } from "./state.js";
import type { ClassEntry, ModelPayload } from "./types.js";
import { escapeHtml } from "./util.js";

export interface Point {
  x: number;
  y: number;
}

/** Deterministic fallback grid for classes the user has not dragged yet. */
export function defaultLayout(classes: ClassEntry[], width: number, height: number): Record<string, Point> {
  const columns = Math.max(1, Math.ceil(Math.sqrt(classes.length)));
  const stepX = width / (columns + 1);
  const rows = Math.max(1, Math.ceil(classes.length / columns));
  const stepY = height / (rows + 1);
  const layout: Record<string, Point> = {};
  classes.forEach((entry, index) => {
    layout[entry.id] = {
      x: Math.round(stepX * (1 + (index % columns))),
      y: Math.round(stepY * (1 + Math.floor(index / columns))),
    };
  });
  return layout;
}

function positions(model: ModelPayload, state: ViewState, width: number, height: number) {
  const fallback = defaultLayout(model.classes, width, height);
  const out: Record<string, Point> = {};
  for (const entry of model.classes) {
    out[entry.id] = state.layout[entry.id] ?? fallback[entry.id];
  }
  return out;
}

const NODE_RADIUS = 26;
const SEGMENT = 28; // half-length of the always-horizontal edge segment

function classGlyph(entry: ClassEntry, at: Point, selected: boolean): string {
  const fill = colorOf(entry);
  const stroke = selected ? ' stroke="#222" stroke-width="3"' : ' stroke="#444"';
  const common = `data-class-id="${entry.id}" class="class-glyph"`;
  if (entry.interpretation === "node") {
    return `<circle ${common} cx="${at.x}" cy="${at.y}" r="${NODE_RADIUS}" fill="${fill}"${stroke}/>`;
  }
  if (entry.interpretation === "generic") {
    const r = NODE_RADIUS;
    const points = `${at.x},${at.y - r} ${at.x + r},${at.y} ${at.x},${at.y + r} ${at.x - r},${at.y}`;
    return `<polygon ${common} points="${points}" fill="${fill}"${stroke}/>`;
  }
  // edge class: the glyph keeps a horizontal segment so labels stay level
  return `<line ${common} x1="${at.x - SEGMENT}" y1="${at.y}" x2="${at.x + SEGMENT}" y2="${at.y}" stroke="${fill}" stroke-width="6"/>`;
}

function connector(from: Point, to: Point, color: string, arrow: boolean): string {
  const marker = arrow ? ' marker-end="url(#arrow)"' : "";
  return `<line class="connector" x1="${from.x}" y1="${from.y}" x2="${to.x}" y2="${to.y}" stroke="${color}" stroke-width="2"${marker}/>`;
}

function labelFor(entry: ClassEntry, at: Point): string {
  const text = `${escapeHtml(entry.label)} (${entry.instances})`;
  const dy = entry.interpretation === "edge" ? -10 : NODE_RADIUS + 14;
  return `<text class="class-label" data-class-id="${entry.id}" x="${at.x}" y="${at.y + dy}" text-anchor="middle">${text}</text>`;
}

function handles(entry: ClassEntry, at: Point): string {
  if (entry.interpretation === "generic") return "";
  const offset = entry.interpretation === "edge" ? SEGMENT + 8 : NODE_RADIUS + 8;
  return (
    `<circle class="handle" data-handle="${entry.id}" data-side="source" cx="${at.x - offset}" cy="${at.y}" r="5"/>` +
    `<circle class="handle" data-handle="${entry.id}" data-side="target" cx="${at.x + offset}" cy="${at.y}" r="5"/>`
  );
}

/** Pure rendering: (model payload, view state) -> SVG markup. */
export function renderModelView(
  model: ModelPayload,
  state: ViewState,
  width = 680,
  height = 440,
): string {
  const at = positions(model, state, width, height);
  const parts: string[] = [
    `<svg class="model-view" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
    '<defs><marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse"><path d="M 0 0 L 10 5 L 0 10 z" fill="#555"/></marker></defs>',
  ];
  // connectors first so glyphs draw on top
  for (const entry of model.classes) {
    if (entry.interpretation !== "edge") continue;
    const center = at[entry.id];
    const color = colorOf(entry);
    if (entry.sourceClass && at[entry.sourceClass]) {
      parts.push(connector({ x: center.x - SEGMENT, y: center.y }, at[entry.sourceClass], color, false));
    }
    if (entry.targetClass && at[entry.targetClass]) {
      parts.push(
        connector({ x: center.x + SEGMENT, y: center.y }, at[entry.targetClass], color, entry.directed === true),
      );
    }
  }
  for (const entry of model.classes) {
    const selected = state.selectedClass === entry.id;
    parts.push(classGlyph(entry, at[entry.id], selected));
    parts.push(labelFor(entry, at[entry.id]));
    parts.push(handles(entry, at[entry.id]));
  }
  parts.push("</svg>");
  return parts.join("\n");
}
