import { readFileSync } from "node:fs";

import { HttpError, type Params, type Transport } from "../src/api.js";
import type { ModelPayload, OpBody } from "../src/types.js";

export function fixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export interface RecordedCall {
  method: "GET" | "POST";
  path: string;
  params?: Params;
  body?: unknown;
}

/** Replays captured service payloads and records everything the UI sends. */
export class FakeTransport implements Transport {
  calls: RecordedCall[] = [];
  sequence: number;
  stale409sRemaining = 0;

  private readonly model = fixture<ModelPayload>("model.json");

  constructor() {
    this.sequence = this.model.sequenceNumber;
  }

  ops(): OpBody[] {
    return this.calls.filter((c) => c.method === "POST" && c.path === "/ops").map((c) => c.body as OpBody);
  }

  async get(path: string, params?: Params): Promise<unknown> {
    this.calls.push({ method: "GET", path, params });
    if (path === "/model") {
      return { ...this.model, sequenceNumber: this.sequence };
    }
    if (path.startsWith("/classes/")) return fixture("rows_movies.json");
    if (path === "/connect/scores") return fixture("scores.json");
    if (path === "/paths") return fixture("paths.json");
    if (path === "/sample") return fixture("sample.json");
    throw new HttpError(404, { path });
  }

  async post(path: string, body: unknown): Promise<unknown> {
    this.calls.push({ method: "POST", path, body });
    if (path === "/ops") {
      if (this.stale409sRemaining > 0) {
        this.stale409sRemaining -= 1;
        throw new HttpError(409, { error: "Stale", sequenceNumber: this.sequence });
      }
      this.sequence += 1;
      const op = body as OpBody;
      return {
        classes: this.model.classes,
        sequenceNumber: this.sequence,
        applied: { opName: op.opName, params: op.params, resultClassIds: [] },
      };
    }
    if (path === "/preview/derive") return fixture("preview.json");
    if (path === "/sample/expand" || path === "/sample/seed") return fixture("sample.json");
    throw new HttpError(404, { path });
  }
}
