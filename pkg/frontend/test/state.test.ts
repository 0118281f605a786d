import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { Store } from "../src/state.js";
import type { OpBody } from "../src/types.js";
import { FakeTransport, fixture } from "./helpers.js";

interface RecordedOps {
  preamble: number;
  ops: { opName: string; params: Record<string, unknown> }[];
}

function freshStore() {
  const transport = new FakeTransport();
  const store = new Store(new ServiceClient(transport));
  return { transport, store };
}

/** The five scripted gestures drive the ops recorded by the real engine. */
async function performGestures(store: Store): Promise<void> {
  await store.promoteAttribute("c0", "genre");
  await store.toggleDirection("c2", "asIs");
  await store.deriveConnected(
    "c0",
    { anchor: "c0", hops: ["c2", "c1"] },
    "gender",
    { custom: "sum(map(values, v -> if v = 1 then 1 else 0)) / count(values)" },
    "men_ratio",
  );
  await store.facetAttribute("c0", "genre");
  await store.filterRows("c1", "gender", ">", 0);
}

describe("gesture audit", () => {
  it("each state-changing gesture posts exactly one op", async () => {
    const { transport, store } = freshStore();
    await store.syncModel();
    await performGestures(store);
    expect(transport.ops()).toHaveLength(5);
    const mutations = transport.calls.filter((c) => c.method === "POST");
    expect(mutations).toHaveLength(5); // nothing mutates outside /ops
  });

  it("posted ops match the records the engine kept for the same session", async () => {
    const { transport, store } = freshStore();
    await store.syncModel();
    await performGestures(store);
    const recorded = fixture<RecordedOps>("recorded_ops.json");
    const engineOps = recorded.ops.slice(recorded.preamble);
    expect(engineOps).toHaveLength(5);
    const posted = transport.ops();
    posted.forEach((op, index) => {
      expect(op.opName).toBe(engineOps[index].opName);
      expect(op.params).toEqual(engineOps[index].params);
    });
  });

  it("reads never mutate: selection, dialogs, sorting post nothing", async () => {
    const { transport, store } = freshStore();
    await store.syncModel();
    store.selectClass("c0");
    store.openDialog("connect");
    store.setSort("title", "desc");
    store.moveClass("c0", 10, 20);
    await store.service.rows("c0");
    await store.service.scores("c1", "c2");
    await store.service.sample();
    expect(transport.ops()).toHaveLength(0);
    expect(transport.calls.filter((c) => c.method === "POST")).toHaveLength(0);
  });
});

describe("op queue and staleness", () => {
  it("keeps at most one op in flight and preserves gesture order", async () => {
    const { transport, store } = freshStore();
    await store.syncModel();
    const first = store.promoteAttribute("c0", "genre");
    const second = store.facetAttribute("c0", "genre");
    const third = store.toggleDirection("c2", "asIs");
    await Promise.all([first, second, third]);
    expect(transport.ops().map((op: OpBody) => op.opName)).toEqual([
      "promote",
      "facet",
      "setDirection",
    ]);
    expect(store.state.sequenceNumber).toBe(8 + 3);
  });

  it("a stale sequence pin refetches the model and retries once", async () => {
    const { transport, store } = freshStore();
    await store.syncModel();
    transport.sequence = 11; // another client moved the model
    transport.stale409sRemaining = 1;
    await store.promoteAttribute("c0", "genre");
    const opPosts = transport.calls.filter((c) => c.method === "POST" && c.path === "/ops");
    expect(opPosts).toHaveLength(2); // rejected attempt + retry
    const modelFetches = transport.calls.filter((c) => c.method === "GET" && c.path === "/model");
    expect(modelFetches.length).toBeGreaterThanOrEqual(2);
    const retry = opPosts[1].body as OpBody;
    expect(retry.ifSequence).toBe(11);
    expect(store.state.sequenceNumber).toBe(12);
  });

  it("a failed op does not wedge the queue", async () => {
    const { transport, store } = freshStore();
    await store.syncModel();
    const bad = store.service.transport.post("/nope", {}).catch(() => "failed");
    await expect(bad).resolves.toBe("failed");
    await store.promoteAttribute("c0", "genre");
    expect(transport.ops()).toHaveLength(1);
  });
});
