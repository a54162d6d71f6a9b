/**
 * Extraction pipeline: encode prompts and an image folder into the engine's
 * embedding files plus the label sidecar.
 *
 * Prototypes are the per-class means of the prompt embeddings, re-normalized
 * to unit length. Few-shot samples take the first k images per class in
 * split (sorted-name) order; the remaining images form the test stream,
 * shuffled by the manifest seed. Undecodable images are skipped with a
 * warning and recorded; a class with zero decoded images is fatal. Re-runs
 * on identical inputs produce identical bytes.
 */

import { writeFileSync } from "node:fs";

import { loadEncoder } from "./encoder.js";
import { meanVector, unitNormalize, writeEmbeddingsFile, writeSidecar } from "./format.js";
import { DecodeError, decodeImageFile, listClassDirs, scanDataset } from "./images.js";
import { ExtractionManifest, promptsForClass } from "./manifest.js";

export interface ExtractionResult {
  classNames: string[];
  dim: number;
  testCount: number;
  fewshotCount: number;
  skipped: string[];
}

/** Deterministic Fisher-Yates driven by a tiny LCG. */
function seededOrder(n: number, seed: number): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  let state = (seed >>> 0) || 1;
  for (let i = n - 1; i > 0; i--) {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    const j = state % (i + 1);
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

export async function extract(manifest: ExtractionManifest): Promise<ExtractionResult> {
  const encoder = await loadEncoder(manifest.encoder);
  const classNames = manifest.class_names ?? listClassDirs(manifest.dataset_root);
  if (classNames.length < 2) throw new Error("need at least 2 classes");

  const prototypes: Float32Array[] = [];
  for (const name of classNames) {
    const prompts = promptsForClass(manifest, name);
    const encoded: Float32Array[] = [];
    for (const prompt of prompts) encoded.push(await encoder.encodeText(prompt));
    prototypes.push(unitNormalize(meanVector(encoded, encoder.dim)));
  }

  const skipped: string[] = [];
  const shots = manifest.fewshot_per_class ?? 0;
  const fewshotRows: Float32Array[] = [];
  const fewshotLabels: number[] = [];
  const testRows: Float32Array[] = [];
  const testLabels: number[] = [];

  const classes = scanDataset(manifest.dataset_root, classNames);
  for (let c = 0; c < classes.length; c++) {
    const encoded: Float32Array[] = [];
    for (const file of classes[c].files) {
      try {
        encoded.push(await encoder.encodeImage(decodeImageFile(file)));
      } catch (err) {
        if (err instanceof DecodeError) {
          console.warn(`warning: skipping ${file}: ${err.message}`);
          skipped.push(file);
          continue;
        }
        throw err;
      }
    }
    if (encoded.length === 0) {
      throw new Error(`class "${classes[c].className}" has no decodable images`);
    }
    const nShots = Math.min(shots, encoded.length);
    for (let i = 0; i < nShots; i++) {
      fewshotRows.push(encoded[i]);
      fewshotLabels.push(c);
    }
    for (let i = nShots; i < encoded.length; i++) {
      testRows.push(encoded[i]);
      testLabels.push(c);
    }
  }
  if (testRows.length === 0) throw new Error("no test images left after few-shot selection");

  const order = seededOrder(testRows.length, manifest.seed ?? 0);
  const shuffledRows = order.map((i) => testRows[i]);
  const shuffledLabels = order.map((i) => testLabels[i]);

  writeEmbeddingsFile(manifest.outputs.prototypes, prototypes, encoder.dim);
  writeEmbeddingsFile(manifest.outputs.test, shuffledRows, encoder.dim);
  if (shots > 0 && manifest.outputs.fewshot) {
    writeEmbeddingsFile(manifest.outputs.fewshot, fewshotRows, encoder.dim);
  }
  writeSidecar(manifest.outputs.sidecar, {
    class_names: classNames,
    labels: shuffledLabels,
    fewshot_indices: fewshotRows.length ? fewshotLabels : undefined,
  });
  if (manifest.outputs.log) {
    writeFileSync(
      manifest.outputs.log,
      JSON.stringify({ encoder: encoder.id, skipped, classes: classNames.length }, null, 2) + "\n"
    );
  }
  return {
    classNames,
    dim: encoder.dim,
    testCount: shuffledRows.length,
    fewshotCount: fewshotRows.length,
    skipped,
  };
}
