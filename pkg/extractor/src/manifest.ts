/** Extraction manifest: what to encode, with what, and where to write it. */

import { readFileSync } from "node:fs";

export interface OutputPaths {
  prototypes: string;
  test: string;
  fewshot?: string;
  sidecar: string;
  log?: string;
}

export interface ExtractionManifest {
  dataset_root: string;
  /** Defaults to the sorted class subdirectories of dataset_root. */
  class_names?: string[];
  /** Templates with a "{}" placeholder for the class name. */
  prompt_templates?: string[];
  /** Explicit per-class prompt lists; wins over templates when present. */
  class_prompts?: Record<string, string[]>;
  encoder: string;
  fewshot_per_class?: number;
  /** Shuffle seed for the emitted test stream order. */
  seed?: number;
  outputs: OutputPaths;
}

export function validateManifest(doc: unknown): ExtractionManifest {
  if (typeof doc !== "object" || doc === null) throw new Error("manifest must be a JSON object");
  const m = doc as Record<string, unknown>;
  if (typeof m.dataset_root !== "string") throw new Error("manifest needs dataset_root");
  if (typeof m.encoder !== "string") throw new Error("manifest needs an encoder id");
  const outputs = m.outputs as Record<string, unknown> | undefined;
  if (!outputs || typeof outputs.prototypes !== "string" || typeof outputs.test !== "string" || typeof outputs.sidecar !== "string") {
    throw new Error("manifest needs outputs.{prototypes,test,sidecar}");
  }
  if (m.prompt_templates === undefined && m.class_prompts === undefined) {
    throw new Error("manifest needs prompt_templates or class_prompts");
  }
  if (m.fewshot_per_class !== undefined) {
    const k = m.fewshot_per_class as number;
    if (!Number.isInteger(k) || k < 0) throw new Error("fewshot_per_class must be a non-negative integer");
    if (k > 0 && typeof outputs.fewshot !== "string") throw new Error("fewshot_per_class set but outputs.fewshot missing");
  }
  return m as unknown as ExtractionManifest;
}

export function loadManifest(path: string): ExtractionManifest {
  return validateManifest(JSON.parse(readFileSync(path, "utf-8")));
}

export function promptsForClass(manifest: ExtractionManifest, className: string): string[] {
  const explicit = manifest.class_prompts?.[className];
  const prompts = explicit ?? (manifest.prompt_templates ?? []).map((t) => t.replaceAll("{}", className));
  if (prompts.length === 0) {
    throw new Error(`class "${className}" has no prompt templates`);
  }
  return prompts;
}
