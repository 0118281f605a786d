import type {
  AppliedPayload,
  ModelPayload,
  OpBody,
  PathsPayload,
  PreviewPayload,
  RowsPayload,
  SamplePayload,
  ScoresPayload,
} from "./types.js";

export type Params = Record<string, string | number | boolean | undefined>;

/** Transport is injectable so tests can run against a recorded service. */
export interface Transport {
  get(path: string, params?: Params): Promise<unknown>;
  post(path: string, body: unknown): Promise<unknown>;
}

export class HttpError extends Error {
  constructor(
    readonly status: number,
    readonly body: unknown,
  ) {
    super(`service responded ${status}`);
  }
}

export class FetchTransport implements Transport {
  constructor(private readonly base: string = "") {}

  private url(path: string, params?: Params): string {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) query.set(key, String(value));
    }
    const suffix = query.toString();
    return this.base + path + (suffix ? `?${suffix}` : "");
  }

  async get(path: string, params?: Params): Promise<unknown> {
    const response = await fetch(this.url(path, params));
    const body = await response.json();
    if (!response.ok) throw new HttpError(response.status, body);
    return body;
  }

  async post(path: string, body: unknown): Promise<unknown> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) throw new HttpError(response.status, payload);
    return payload;
  }
}

/** Thin typed facade over the service endpoints. */
export class ServiceClient {
  constructor(readonly transport: Transport) {}

  model(): Promise<ModelPayload> {
    return this.transport.get("/model") as Promise<ModelPayload>;
  }

  rows(
    classId: string,
    options: { offset?: number; limit?: number; sortBy?: string; dir?: "asc" | "desc" } = {},
  ): Promise<RowsPayload> {
    return this.transport.get(`/classes/${classId}/rows`, options) as Promise<RowsPayload>;
  }

  applyOp(op: OpBody): Promise<AppliedPayload> {
    return this.transport.post("/ops", op) as Promise<AppliedPayload>;
  }

  scores(src: string, trg: string, sample?: number, seed?: number): Promise<ScoresPayload> {
    return this.transport.get("/connect/scores", { src, trg, sample, seed }) as Promise<ScoresPayload>;
  }

  paths(anchor: string, maxDepth = 4): Promise<PathsPayload> {
    return this.transport.get("/paths", { anchor, maxDepth }) as Promise<PathsPayload>;
  }

  previewDerive(body: {
    path: { anchor: string; hops: string[] };
    targetAttr: string;
    reducer: Record<string, string>;
    sampleRows?: number;
  }): Promise<PreviewPayload> {
    return this.transport.post("/preview/derive", body) as Promise<PreviewPayload>;
  }

  sample(perClass = 5, seed = 0): Promise<SamplePayload> {
    return this.transport.get("/sample", { perClass, seed }) as Promise<SamplePayload>;
  }

  expandSample(sample: SamplePayload, node: string): Promise<SamplePayload> {
    return this.transport.post("/sample/expand", { sample, node }) as Promise<SamplePayload>;
  }

  seedSample(sample: SamplePayload, items: string[]): Promise<SamplePayload> {
    return this.transport.post("/sample/seed", { sample, items }) as Promise<SamplePayload>;
  }
}
