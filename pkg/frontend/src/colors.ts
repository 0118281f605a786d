import type { ClassEntry } from "./types.js";

// eight qualitative palette slots; everything past them falls back to gray
export const PALETTE = [
  "#4c78a8",
  "#f58518",
  "#54a24b",
  "#e45756",
  "#72b7b2",
  "#eeca3b",
  "#b279a2",
  "#9d755d",
];

export const GRAY = "#bab0ac";

export function colorOf(entry: ClassEntry): string {
  if (entry.color === "gray" || typeof entry.color !== "number") return GRAY;
  return PALETTE[entry.color] ?? GRAY;
}
