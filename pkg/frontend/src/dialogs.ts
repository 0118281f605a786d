import type { CellValue, PathEntry, PathsPayload, PreviewPayload, ScoreEntry, ScoresPayload } from "./types.js";
import { cellText, escapeHtml } from "./util.js";

// -- connect dialog -----------------------------------------------------------

export interface BarGeometry {
  solid: number; // normalized width of the combined score
  shaded: number; // extra width up to the better one-sided score
}

/**
 * Bar encoding for one key combination: the solid bar shows the combined
 * score; when one class alone scores higher than the combination, a
 * shaded extension shows that one-sided score.
 */
export function connectBarGeometry(score: ScoreEntry): BarGeometry {
  const normalize = (value: number) => Math.max(0, Math.min(1, (value + 2) / 4));
  const solid = normalize(score.total);
  const oneSided = normalize(2 * Math.max(score.srcContribution, score.trgContribution));
  return { solid, shaded: Math.max(0, oneSided - solid) };
}

function histogram(title: string, degrees: Record<string, number>): string {
  const entries = Object.entries(degrees).sort((a, b) => Number(a[0]) - Number(b[0]));
  const peak = Math.max(1, ...entries.map(([, count]) => count));
  const bars = entries
    .map(
      ([degree, count]) =>
        `<div class="hist-bar" data-degree="${degree}" style="height:${Math.round((36 * count) / peak)}px" title="degree ${degree}: ${count}"></div>`,
    )
    .join("");
  return `<div class="histogram"><span>${escapeHtml(title)}</span>${bars}</div>`;
}

export function renderConnectDialog(
  payload: ScoresPayload,
  selection: { srcKey: string; trgKey: string } | null,
): string {
  const rows = payload.scores
    .map((score) => {
      const geometry = connectBarGeometry(score);
      const picked =
        selection !== null && selection.srcKey === score.srcKey && selection.trgKey === score.trgKey;
      const solid = Math.round(geometry.solid * 200);
      const shaded = Math.round(geometry.shaded * 200);
      return (
        `<tr class="score-row${picked ? " picked" : ""}${score.isIndexPair ? " index-pair" : ""}"` +
        ` data-src-key="${escapeHtml(score.srcKey)}" data-trg-key="${escapeHtml(score.trgKey)}">` +
        `<td>${escapeHtml(score.srcKey)}</td><td>${escapeHtml(score.trgKey)}</td>` +
        `<td class="bar-cell"><span class="bar solid" data-total="${score.total}" style="width:${solid}px"></span>` +
        `<span class="bar shaded" style="width:${shaded}px"></span></td>` +
        `<td class="score-value">${score.total.toFixed(3)}</td></tr>`
      );
    })
    .join("\n");
  const picked = selection
    ? payload.scores.find((s) => s.srcKey === selection.srcKey && s.trgKey === selection.trgKey)
    : undefined;
  const histograms = picked
    ? histogram("source degrees", picked.srcDegrees) + histogram("target degrees", picked.trgDegrees)
    : "";
  const commit = selection
    ? `<button class="commit" data-commit-connect data-src-key="${escapeHtml(selection.srcKey)}" data-trg-key="${escapeHtml(selection.trgKey)}">Connect</button>`
    : "";
  return (
    `<section class="dialog connect-dialog" data-src="${payload.src}" data-trg="${payload.trg}">` +
    `<table><thead><tr><th>source key</th><th>target key</th><th>score</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table>${histograms}${commit}</section>`
  );
}

// -- path dialog ---------------------------------------------------------------

/** Next classes reachable by extending the current selection by one hop. */
export function nextHops(paths: PathEntry[], selection: string[]): string[] {
  const out: string[] = [];
  for (const path of paths) {
    const hops = path.hops;
    if (hops.length !== selection.length + 1) continue;
    if (selection.every((hop, i) => hops[i] === hop) && !out.includes(hops[hops.length - 1])) {
      out.push(hops[hops.length - 1]);
    }
  }
  return out;
}

export function renderPathDialog(
  payload: PathsPayload,
  anchorLabel: string,
  labels: Record<string, string>,
  selection: string[],
): string {
  const crumbs = [anchorLabel, ...selection.map((id) => labels[id] ?? id)]
    .map((label) => `<span class="crumb">${escapeHtml(label)}</span>`)
    .join('<span class="crumb-sep">→</span>');
  const options = nextHops(payload.paths, selection)
    .map(
      (id) =>
        `<button class="hop-option" data-hop="${id}">${escapeHtml(labels[id] ?? id)}</button>`,
    )
    .join("");
  const truncated = payload.truncated ? '<p class="truncated">more paths not shown</p>' : "";
  return (
    `<section class="dialog path-dialog"><div class="breadcrumbs">${crumbs}</div>` +
    `<div class="hop-options">${options}</div>${truncated}` +
    `<button class="commit" data-commit-path${selection.length < 2 ? " disabled" : ""}>Use path</button></section>`
  );
}

// -- function dialog -----------------------------------------------------------

export const STANDARD_REDUCERS = [
  "count",
  "sum",
  "mean",
  "median",
  "mode",
  "concat",
  "min",
  "max",
  "any",
  "all",
] as const;

/** The advanced editor starts from code equivalent to the standard choice. */
export function templateFor(reducer: string): string {
  return `${reducer}(values)`;
}

export interface FunctionDialogState {
  mode: "standard" | "custom";
  reducer: string;
  source: string;
  preview: PreviewPayload | null;
}

export function renderFunctionDialog(state: FunctionDialogState): string {
  const options = STANDARD_REDUCERS.map(
    (name) =>
      `<option value="${name}"${name === state.reducer ? " selected" : ""}>${name}</option>`,
  ).join("");
  const previewRows = (state.preview?.values ?? [])
    .map(
      (entry) =>
        `<tr><td>${entry.ordinal}</td><td class="preview-value">${escapeHtml(cellText(entry.value as CellValue))}</td></tr>`,
    )
    .join("");
  return (
    `<section class="dialog function-dialog" data-mode="${state.mode}">` +
    `<label><input type="radio" name="mode" value="standard"${state.mode === "standard" ? " checked" : ""}/> standard</label>` +
    `<label><input type="radio" name="mode" value="custom"${state.mode === "custom" ? " checked" : ""}/> advanced</label>` +
    `<select class="reducer-pick">${options}</select>` +
    `<textarea class="expression"${state.mode === "standard" ? " disabled" : ""}>${escapeHtml(state.source)}</textarea>` +
    `<table class="preview"><thead><tr><th>row</th><th>value</th></tr></thead><tbody>${previewRows}</tbody></table>` +
    `<button class="commit" data-commit-function>Derive</button></section>`
  );
}

/** The reducer body a dialog state commits: standard name or edited code. */
export function reducerBody(state: FunctionDialogState): Record<string, string> {
  return state.mode === "standard" ? { standard: state.reducer } : { custom: state.source };
}
