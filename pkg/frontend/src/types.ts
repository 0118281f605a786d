export type CellValue =
  | null
  | boolean
  | number
  | string
  | CellValue[]
  | { [key: string]: CellValue };

export type Interpretation = "generic" | "node" | "edge";

export interface ClassEntry {
  id: string;
  label: string;
  interpretation: Interpretation;
  color: number | "gray";
  instances: number;
  directed?: boolean;
  sourceClass?: string | null;
  targetClass?: string | null;
}

export interface ModelPayload {
  classes: ClassEntry[];
  sequenceNumber: number;
}

export interface ColumnEntry {
  name: string;
  summary: Record<string, CellValue>;
}

export interface RowEntry {
  ordinal: number;
  cells: Record<string, CellValue>;
}

export interface RowsPayload {
  class: string;
  total: number;
  columns: ColumnEntry[];
  rows: RowEntry[];
  sequenceNumber: number;
}

export interface ScoreEntry {
  srcKey: string;
  trgKey: string;
  total: number;
  srcContribution: number;
  trgContribution: number;
  srcDegrees: Record<string, number>;
  trgDegrees: Record<string, number>;
  isIndexPair: boolean;
  approximate: boolean;
}

export interface ScoresPayload {
  src: string;
  trg: string;
  scores: ScoreEntry[];
  sequenceNumber: number;
}

export interface PathEntry {
  anchor: string;
  hops: string[];
}

export interface PathsPayload {
  paths: PathEntry[];
  truncated: boolean;
  sequenceNumber: number;
}

export interface SampleLink {
  id: string;
  source: string;
  target: string;
}

export interface SamplePayload {
  nodes: string[];
  links: SampleLink[];
  perClassCounts: Record<string, number>;
  document?: unknown;
}

export interface PreviewPayload {
  values: { ordinal: number; value: CellValue }[];
  sequenceNumber: number;
}

export interface OpBody {
  opName: string;
  params: Record<string, unknown>;
  ifSequence?: number;
}

export interface AppliedOp {
  opName: string;
  params: Record<string, unknown>;
  resultClassIds: string[];
}

export interface AppliedPayload extends ModelPayload {
  applied: AppliedOp;
}
