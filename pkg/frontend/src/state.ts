import { HttpError, ServiceClient } from "./api.js";
import type { AppliedPayload, CellValue, ModelPayload, OpBody } from "./types.js";

export type DialogKind = "connect" | "path" | "function" | null;

export interface ViewState {
  selectedClass: string | null;
  selectedItems: string[];
  activeDialog: DialogKind;
  sequenceNumber: number;
  layout: Record<string, { x: number; y: number }>;
  sortBy: string | null;
  sortDir: "asc" | "desc";
}

export interface PathDraft {
  anchor: string;
  hops: string[];
}

/**
 * Client-side store. Every state-changing gesture funnels through exactly
 * one POST /ops; at most one op is in flight, later gestures queue behind
 * it. A stale sequence pin triggers a model refetch and a single retry.
 */
export class Store {
  state: ViewState = {
    selectedClass: null,
    selectedItems: [],
    activeDialog: null,
    sequenceNumber: 0,
    layout: {},
    sortBy: null,
    sortDir: "asc",
  };
  model: ModelPayload | null = null;
  onChange: (() => void) | null = null;

  private chain: Promise<unknown> = Promise.resolve();

  constructor(readonly service: ServiceClient) {}

  private changed(): void {
    this.onChange?.();
  }

  async syncModel(): Promise<ModelPayload> {
    const model = await this.service.model();
    this.model = model;
    this.state.sequenceNumber = model.sequenceNumber;
    this.changed();
    return model;
  }

  /** True when the server moved past what this client last saw. */
  isStale(serverSequence: number): boolean {
    return serverSequence > this.state.sequenceNumber;
  }

  selectClass(classId: string | null): void {
    this.state.selectedClass = classId;
    this.changed();
  }

  openDialog(kind: DialogKind): void {
    this.state.activeDialog = kind;
    this.changed();
  }

  moveClass(classId: string, x: number, y: number): void {
    this.state.layout[classId] = { x, y };
    this.changed();
  }

  setSort(attr: string | null, dir: "asc" | "desc" = "asc"): void {
    this.state.sortBy = attr;
    this.state.sortDir = dir;
    this.changed();
  }

  /** Serialize ops: one in flight, the rest queue in gesture order. */
  private enqueue(op: OpBody): Promise<AppliedPayload> {
    const run = this.chain.then(() => this.postOnce(op));
    this.chain = run.catch(() => undefined); // a failed op must not block the queue
    return run;
  }

  private async postOnce(op: OpBody): Promise<AppliedPayload> {
    const body: OpBody = { ...op, ifSequence: this.state.sequenceNumber };
    try {
      return this.applied(await this.service.applyOp(body));
    } catch (error) {
      if (error instanceof HttpError && error.status === 409) {
        await this.syncModel(); // stale: refetch before the single retry
        return this.applied(
          await this.service.applyOp({ ...op, ifSequence: this.state.sequenceNumber }),
        );
      }
      throw error;
    }
  }

  private applied(payload: AppliedPayload): AppliedPayload {
    this.model = { classes: payload.classes, sequenceNumber: payload.sequenceNumber };
    this.state.sequenceNumber = payload.sequenceNumber;
    this.changed();
    return payload;
  }

  // -- gestures: each maps to exactly one op record -------------------------

  promoteAttribute(classId: string, attr: string): Promise<AppliedPayload> {
    return this.enqueue({ opName: "promote", params: { class: classId, attr } });
  }

  facetAttribute(classId: string, attr: string): Promise<AppliedPayload> {
    return this.enqueue({ opName: "facet", params: { class: classId, attr } });
  }

  filterRows(
    classId: string,
    attr: string,
    op: "<" | "<=" | ">" | ">=" | "=" | "!=",
    literal: CellValue,
  ): Promise<AppliedPayload> {
    return this.enqueue({
      opName: "filterAttr",
      params: { class: classId, predicate: { attr, op, literal } },
    });
  }

  filterByPath(
    classId: string,
    path: PathDraft,
    targetAttr: string,
    reducer: Record<string, string>,
    op: string,
    literal: CellValue,
  ): Promise<AppliedPayload> {
    return this.enqueue({
      opName: "filterConnectivity",
      params: {
        class: classId,
        path,
        targetAttr,
        reducer,
        predicate: { attr: "value", op, literal },
      },
    });
  }

  deriveInClass(classId: string, attr: string, source: string): Promise<AppliedPayload> {
    return this.enqueue({
      opName: "deriveInClass",
      params: { class: classId, attr, expr: { custom: source } },
    });
  }

  deriveConnected(
    classId: string,
    path: PathDraft,
    targetAttr: string,
    reducer: Record<string, string>,
    attr: string,
  ): Promise<AppliedPayload> {
    return this.enqueue({
      opName: "deriveConnected",
      params: { class: classId, path, targetAttr, reducer, attr },
    });
  }

  commitConnect(src: string, trg: string, srcKey: string, trgKey: string): Promise<AppliedPayload> {
    const encode = (key: string) => (key === "(index)" ? { index: true } : key);
    return this.enqueue({
      opName: "connect",
      params: { src, trg, srcKey: encode(srcKey), trgKey: encode(trgKey) },
    });
  }

  disconnectSide(classId: string, side: "source" | "target"): Promise<AppliedPayload> {
    return this.enqueue({ opName: "disconnect", params: { class: classId, side } });
  }

  projectPath(path: PathDraft): Promise<AppliedPayload> {
    return this.enqueue({ opName: "projectEdge", params: { path } });
  }

  toggleDirection(classId: string, mode: "undirected" | "asIs" | "swapped"): Promise<AppliedPayload> {
    return this.enqueue({ opName: "setDirection", params: { class: classId, mode } });
  }

  convertToEdges(classId: string): Promise<AppliedPayload> {
    return this.enqueue({ opName: "convertToEdges", params: { class: classId } });
  }

  convertToNodes(classId: string): Promise<AppliedPayload> {
    return this.enqueue({ opName: "convertToNodes", params: { class: classId } });
  }

  interpretAs(classId: string, kind: "node" | "edge" | "generic"): Promise<AppliedPayload> {
    const name =
      kind === "node" ? "interpretAsNode" : kind === "edge" ? "interpretAsEdge" : "interpretAsGeneric";
    return this.enqueue({ opName: name, params: { class: classId } });
  }

  renameClass(classId: string, label: string): Promise<AppliedPayload> {
    return this.enqueue({ opName: "renameClass", params: { class: classId, label } });
  }

  unrollAttribute(classId: string, attr: string): Promise<AppliedPayload> {
    return this.enqueue({ opName: "unrollToClass", params: { class: classId, attr } });
  }

  expandAttribute(classId: string, attr: string): Promise<AppliedPayload> {
    return this.enqueue({ opName: "expandToClass", params: { class: classId, attr } });
  }
}
