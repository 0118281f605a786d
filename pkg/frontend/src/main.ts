import { FetchTransport, ServiceClient } from "./api.js";
import { renderAttributeView } from "./attributeView.js";
import {
  FunctionDialogState,
  reducerBody,
  renderConnectDialog,
  renderFunctionDialog,
  renderPathDialog,
  templateFor,
} from "./dialogs.js";
import { renderModelView } from "./modelView.js";
import { renderSampleView } from "./sampleView.js";
import { Store } from "./state.js";
import type { PathsPayload, RowsPayload, SamplePayload, ScoresPayload } from "./types.js";

const service = new ServiceClient(new FetchTransport(""));
const store = new Store(service);

const panes = {
  model: document.getElementById("model-view")!,
  attributes: document.getElementById("attribute-view")!,
  sample: document.getElementById("sample-view")!,
  dialog: document.getElementById("dialog")!,
};

let rows: RowsPayload | null = null;
let sample: SamplePayload | null = null;
let scores: ScoresPayload | null = null;
let scorePick: { srcKey: string; trgKey: string } | null = null;
let connectPair: { src: string; trg: string } | null = null;
let paths: PathsPayload | null = null;
let pathSelection: string[] = [];
let pathPurpose: "project" | "derive" = "project";
let functionState: FunctionDialogState = {
  mode: "standard",
  reducer: "mean",
  source: templateFor("mean"),
  preview: null,
};
let deriveTarget: { classId: string; attr: string } | null = null;

function labels(): Record<string, string> {
  const out: Record<string, string> = {};
  for (const entry of store.model?.classes ?? []) out[entry.id] = entry.label;
  return out;
}

function render(): void {
  if (!store.model) return;
  panes.model.innerHTML = renderModelView(store.model, store.state);
  if (rows) panes.attributes.innerHTML = renderAttributeView(rows, store.model, store.state);
  if (sample) panes.sample.innerHTML = renderSampleView(sample, store.model, store.state);
  if (store.state.activeDialog === "connect" && scores) {
    panes.dialog.innerHTML = renderConnectDialog(scores, scorePick);
  } else if (store.state.activeDialog === "path" && paths) {
    const anchor = store.state.selectedClass ?? "";
    panes.dialog.innerHTML = renderPathDialog(paths, labels()[anchor] ?? anchor, labels(), pathSelection);
  } else if (store.state.activeDialog === "function") {
    panes.dialog.innerHTML = renderFunctionDialog(functionState);
  } else {
    panes.dialog.innerHTML = "";
  }
}

store.onChange = render;

async function refreshRows(): Promise<void> {
  const classId = store.state.selectedClass;
  if (!classId) return;
  rows = await service.rows(classId, {
    limit: 40,
    sortBy: store.state.sortBy ?? undefined,
    dir: store.state.sortDir,
  });
  render();
}

async function refreshSample(): Promise<void> {
  sample = await service.sample(5, 0);
  render();
}

async function refreshPreview(): Promise<void> {
  if (!deriveTarget || pathSelection.length < 1) return;
  functionState.preview = await service.previewDerive({
    path: { anchor: deriveTarget.classId, hops: pathSelection },
    targetAttr: deriveTarget.attr,
    reducer: reducerBody(functionState),
    sampleRows: 8,
  });
  render();
}

// one poll per second: refetch when another client moved the model
setInterval(async () => {
  try {
    const fresh = await service.model();
    if (store.isStale(fresh.sequenceNumber)) {
      store.model = fresh;
      store.state.sequenceNumber = fresh.sequenceNumber;
      await Promise.all([refreshRows(), refreshSample()]);
    }
  } catch {
    // service unreachable; keep the last known state
  }
}, 1000);

document.addEventListener("click", async (event) => {
  const target = event.target as HTMLElement;
  const classGlyph = target.closest("[data-class-id]") as HTMLElement | null;
  if (classGlyph && target.closest(".model-view")) {
    store.selectClass(classGlyph.dataset.classId!);
    await refreshRows();
    return;
  }
  const tab = target.closest("[data-tab]") as HTMLElement | null;
  if (tab) {
    store.selectClass(tab.dataset.tab!);
    await refreshRows();
    return;
  }
  const menu = target.closest("[data-menu]") as HTMLElement | null;
  if (menu && store.state.selectedClass) {
    const classId = store.state.selectedClass;
    const attr = menu.dataset.attr!;
    const action = menu.dataset.menu!;
    if (action === "promote") await store.promoteAttribute(classId, attr);
    else if (action === "facet") await store.facetAttribute(classId, attr);
    else if (action === "filter") {
      const answer = prompt(`keep rows where ${attr} is…  (e.g. > 10)`, "> 0");
      if (answer) {
        const [op, ...rest] = answer.trim().split(/\s+/);
        const literal = Number.isNaN(Number(rest.join(" "))) ? rest.join(" ") : Number(rest.join(" "));
        await store.filterRows(classId, attr, op as never, literal);
      }
    } else if (action === "derive") {
      const source = prompt("expression over row attributes", `row.${attr}`);
      const name = source ? prompt("new attribute name", `${attr}_derived`) : null;
      if (source && name) await store.deriveInClass(classId, name, source);
    } else if (action === "derive-connected" || action === "connectivity-filter") {
      deriveTarget = { classId, attr };
      pathPurpose = "derive";
      pathSelection = [];
      paths = await service.paths(classId);
      store.openDialog("path");
    } else if (action === "sort-asc" || action === "sort-desc") {
      store.setSort(attr, action === "sort-asc" ? "asc" : "desc");
    }
    await refreshRows();
    await refreshSample();
    return;
  }
  const handle = target.closest("[data-handle]") as HTMLElement | null;
  if (handle) {
    // drag-to-connect reduced to two clicks: pick one handle, then another
    if (!connectPair) {
      connectPair = { src: handle.dataset.handle!, trg: "" };
    } else if (!connectPair.trg) {
      connectPair.trg = handle.dataset.handle!;
      scores = await service.scores(connectPair.src, connectPair.trg);
      scorePick = null;
      store.openDialog("connect");
    }
    return;
  }
  const scoreRow = target.closest(".score-row") as HTMLElement | null;
  if (scoreRow) {
    scorePick = { srcKey: scoreRow.dataset.srcKey!, trgKey: scoreRow.dataset.trgKey! };
    render();
    return;
  }
  if (target.closest("[data-commit-connect]") && connectPair && scorePick) {
    await store.commitConnect(connectPair.src, connectPair.trg, scorePick.srcKey, scorePick.trgKey);
    connectPair = null;
    store.openDialog(null);
    await refreshSample();
    return;
  }
  const hop = target.closest("[data-hop]") as HTMLElement | null;
  if (hop) {
    pathSelection = [...pathSelection, hop.dataset.hop!];
    render();
    return;
  }
  if (target.closest("[data-commit-path]")) {
    if (pathPurpose === "project" && store.state.selectedClass) {
      await store.projectPath({ anchor: store.state.selectedClass, hops: pathSelection });
      store.openDialog(null);
    } else {
      functionState = { ...functionState, preview: null };
      store.openDialog("function");
      await refreshPreview();
    }
    return;
  }
  if (target.closest("[data-commit-function]") && deriveTarget) {
    const name = prompt("new attribute name", `${deriveTarget.attr}_over_path`);
    if (name) {
      await store.deriveConnected(
        deriveTarget.classId,
        { anchor: deriveTarget.classId, hops: pathSelection },
        deriveTarget.attr,
        reducerBody(functionState),
        name,
      );
      store.openDialog(null);
      await refreshRows();
    }
    return;
  }
  const sampleNode = target.closest(".sample-node") as HTMLElement | null;
  if (sampleNode && sample) {
    sample = await service.expandSample(sample, sampleNode.dataset.item!);
    render();
  }
});

document.addEventListener("change", async (event) => {
  const target = event.target as HTMLElement;
  if (target.matches(".reducer-pick")) {
    const reducer = (target as HTMLSelectElement).value;
    functionState = { ...functionState, reducer, source: templateFor(reducer) };
    await refreshPreview();
  }
  if (target.matches('input[name="mode"]')) {
    functionState = { ...functionState, mode: (target as HTMLInputElement).value as never };
    render();
  }
});

document.addEventListener("input", async (event) => {
  const target = event.target as HTMLElement;
  if (target.matches(".expression")) {
    functionState = { ...functionState, source: (target as HTMLTextAreaElement).value };
    await refreshPreview();
  }
});

(async () => {
  await store.syncModel();
  const first = store.model?.classes[0];
  if (first) store.selectClass(first.id);
  await Promise.all([refreshRows(), refreshSample()]);
})();
