import { describe, expect, it } from "vitest";

import { renderAttributeView } from "../src/attributeView.js";
import { GRAY, PALETTE, colorOf } from "../src/colors.js";
import { defaultLayout, renderModelView } from "../src/modelView.js";
import { layoutSample, renderSampleView } from "../src/sampleView.js";
import type { ViewState } from "../src/state.js";
import type { ClassEntry, ModelPayload, RowsPayload, SamplePayload } from "../src/types.js";
import { cellText } from "../src/util.js";
import { fixture } from "./helpers.js";

const state: ViewState = {
  selectedClass: "c0",
  selectedItems: [],
  activeDialog: null,
  sequenceNumber: 8,
  layout: {},
  sortBy: null,
  sortDir: "asc",
};

describe("cell rendering", () => {
  it("encodes nested structures as bracket plus size", () => {
    expect(cellText([1, 2, 3, 4])).toBe("[4]");
    expect(cellText({ a: 1, b: 2 })).toBe("{2}");
    expect(cellText(null)).toBe("");
    expect(cellText(true)).toBe("true");
    expect(cellText("plain")).toBe("plain");
    expect(cellText(3.5)).toBe("3.5");
  });
});

describe("model view", () => {
  const model = fixture<ModelPayload>("model.json");

  it("is a pure function of payload and state", () => {
    expect(renderModelView(model, state)).toBe(renderModelView(model, state));
  });

  it("uses the three glyph encodings and count labels", () => {
    const generic: ModelPayload = {
      classes: [
        ...model.classes,
        { id: "c9", label: "raw", interpretation: "generic", color: 3, instances: 7 },
      ],
      sequenceNumber: 8,
    };
    const html = renderModelView(generic, state);
    expect(html).toContain("<circle"); // node classes
    expect(html).toContain("<polygon"); // the generic diamond
    expect(html).toContain("movies (3)");
    expect(html).toContain("raw (7)");
    // the edge glyph keeps a horizontal segment: equal y endpoints
    const segment = /<line data-class-id="c2"[^>]*y1="([\d.]+)"[^>]*y2="([\d.]+)"/.exec(html);
    expect(segment).not.toBeNull();
    expect(segment![1]).toBe(segment![2]);
    expect(html).toContain('data-handle="c2"');
  });

  it("draws a direction marker only for directed edges", () => {
    const directed: ModelPayload = JSON.parse(JSON.stringify(fixture("model_after_ops.json")));
    const cast = directed.classes.find((c: ClassEntry) => c.id === "c2")!;
    expect(cast.directed).toBe(true);
    expect(renderModelView(directed, state)).toContain('marker-end="url(#arrow)"');
    expect(renderModelView(fixture<ModelPayload>("model.json"), state)).not.toContain(
      'marker-end="url(#arrow)"',
    );
  });

  it("drops to gray past eight palette slots", () => {
    const entries: ClassEntry[] = Array.from({ length: 10 }, (_, i) => ({
      id: `k${i}`,
      label: `k${i}`,
      interpretation: "node",
      color: i < 8 ? i : "gray",
      instances: 1,
    }));
    expect(colorOf(entries[0])).toBe(PALETTE[0]);
    expect(colorOf(entries[8])).toBe(GRAY);
    const html = renderModelView({ classes: entries, sequenceNumber: 0 }, state);
    expect(html).toContain(GRAY);
  });

  it("keeps every class inside the default layout bounds", () => {
    const layout = defaultLayout(fixture<ModelPayload>("model.json").classes, 600, 400);
    for (const point of Object.values(layout)) {
      expect(point.x).toBeGreaterThan(0);
      expect(point.x).toBeLessThan(600);
      expect(point.y).toBeGreaterThan(0);
      expect(point.y).toBeLessThan(400);
    }
  });
});

describe("attribute view", () => {
  const model = fixture<ModelPayload>("model.json");
  const rows = fixture<RowsPayload>("rows_movies.json");

  it("renders headers with menus and a row per item", () => {
    const html = renderAttributeView(rows, model, state);
    expect(html).toContain('data-menu="promote"');
    expect(html).toContain('data-menu="connectivity-filter"');
    expect([...html.matchAll(/<tr data-ordinal=/g)]).toHaveLength(rows.rows.length);
    expect(html).toContain("Notting Hill");
    expect(html).toContain(`${rows.rows.length} of ${rows.total} rows`);
  });

  it("shows nested cells in the bracket encoding", () => {
    const nested: RowsPayload = {
      class: "c0",
      total: 1,
      columns: [{ name: "cast", summary: {} }],
      rows: [{ ordinal: 0, cells: { cast: [{ pid: "p1" }, { pid: "p2" }, { pid: "p3" }, { pid: "p4" }] } }],
      sequenceNumber: 0,
    };
    expect(renderAttributeView(nested, model, state)).toContain("<td>[4]</td>");
  });

  it("marks the active sort column", () => {
    const sorted = { ...state, sortBy: "revenue", sortDir: "desc" as const };
    expect(renderAttributeView(rows, model, sorted)).toContain("revenue ▼");
  });
});

describe("sample view", () => {
  const model = fixture<ModelPayload>("model.json");
  const sample = fixture<SamplePayload>("sample.json");

  it("lays out deterministically within bounds", () => {
    const first = layoutSample(sample, 640, 420);
    const second = layoutSample(sample, 640, 420);
    expect(second).toEqual(first);
    for (const point of Object.values(first)) {
      expect(point.x).toBeGreaterThanOrEqual(12);
      expect(point.x).toBeLessThanOrEqual(628);
      expect(point.y).toBeGreaterThanOrEqual(12);
      expect(point.y).toBeLessThanOrEqual(408);
    }
  });

  it("renders hover labels and expandable nodes", () => {
    const html = renderSampleView(sample, model, state);
    expect([...html.matchAll(/<title>/g)]).toHaveLength(sample.nodes.length);
    expect([...html.matchAll(/class="sample-node"/g)]).toHaveLength(sample.nodes.length);
    expect([...html.matchAll(/class="sample-link"/g)]).toHaveLength(sample.links.length);
  });

  it("renders persistent labels for selected items", () => {
    const selected = { ...state, selectedItems: [sample.nodes[0]] };
    expect(renderSampleView(sample, model, selected)).toContain("persistent-label");
  });
});
