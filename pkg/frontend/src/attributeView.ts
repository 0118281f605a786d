import type { ViewState } from "./state.js";
import type { ModelPayload, RowsPayload } from "./types.js";
import { cellText, escapeHtml } from "./util.js";

/** Header menu entries; each commits through exactly one store gesture. */
export const HEADER_ACTIONS = [
  ["promote", "Promote unique values"],
  ["facet", "Facet by value"],
  ["filter", "Filter rows"],
  ["connectivity-filter", "Filter by connectivity"],
  ["derive", "Derive in class"],
  ["derive-connected", "Derive over a path"],
  ["sort-asc", "Sort ascending"],
  ["sort-desc", "Sort descending"],
] as const;

function tabs(model: ModelPayload, state: ViewState): string {
  const buttons = model.classes
    .map((entry) => {
      const active = entry.id === state.selectedClass ? ' class="tab active"' : ' class="tab"';
      return `<button${active} data-tab="${entry.id}">${escapeHtml(entry.label)}</button>`;
    })
    .join("");
  return `<nav class="tabs">${buttons}</nav>`;
}

function headerCell(name: string, state: ViewState): string {
  const items = HEADER_ACTIONS.map(
    ([action, title]) =>
      `<button class="menu-item" data-menu="${action}" data-attr="${escapeHtml(name)}">${title}</button>`,
  ).join("");
  const sorted = state.sortBy === name ? (state.sortDir === "asc" ? " ▲" : " ▼") : "";
  return (
    `<th data-column="${escapeHtml(name)}"><span class="column-name">${escapeHtml(name)}${sorted}</span>` +
    `<div class="column-menu">${items}</div></th>`
  );
}

/** Pure rendering of the paged table for the selected class. */
export function renderAttributeView(rows: RowsPayload, model: ModelPayload, state: ViewState): string {
  const names = rows.columns.map((column) => column.name);
  const head = names.map((name) => headerCell(name, state)).join("");
  const body = rows.rows
    .map((row) => {
      const cells = names
        .map((name) => `<td>${escapeHtml(cellText(row.cells[name] ?? null))}</td>`)
        .join("");
      return `<tr data-ordinal="${row.ordinal}">${cells}</tr>`;
    })
    .join("\n");
  return [
    tabs(model, state),
    `<table class="attribute-view" data-class-id="${rows.class}">`,
    `<thead><tr>${head}</tr></thead>`,
    `<tbody>${body}</tbody>`,
    "</table>",
    `<footer class="paging">${rows.rows.length} of ${rows.total} rows</footer>`,
  ].join("\n");
}
