/**
 * Binary embedding file + JSON label sidecar, matching the engine's ingestion
 * contract bit for bit.
 *
 * Layout: "ECLP" | u32 version=1 | u32 count | u32 dim | count*dim float32,
 * all little-endian, rows stored verbatim (the engine normalizes on read).
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = "ECLP";
export const VERSION = 1;
const HEADER_BYTES = 16;

export function encodeEmbeddings(rows: Float32Array[], dim: number): Buffer {
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`row has ${row.length} values, expected ${dim}`);
    }
  }
  const buf = Buffer.alloc(HEADER_BYTES + rows.length * dim * 4);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt32LE(rows.length, 8);
  buf.writeUInt32LE(dim, 12);
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  let offset = 0;
  for (const row of rows) {
    for (let j = 0; j < dim; j++) {
      view.setFloat32(offset, row[j], true);
      offset += 4;
    }
  }
  return buf;
}

export function writeEmbeddingsFile(path: string, rows: Float32Array[], dim: number): void {
  writeFileSync(path, encodeEmbeddings(rows, dim));
}

export interface DecodedEmbeddings {
  count: number;
  dim: number;
  rows: Float32Array[];
}

/** Reader used by the tests to confirm byte-exact round trips. */
export function readEmbeddingsFile(path: string): DecodedEmbeddings {
  const buf = readFileSync(path);
  if (buf.length < HEADER_BYTES) throw new Error("file too short for header");
  if (buf.toString("ascii", 0, 4) !== MAGIC) throw new Error("bad magic");
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`unsupported version ${version}`);
  const count = buf.readUInt32LE(8);
  const dim = buf.readUInt32LE(12);
  if (buf.length !== HEADER_BYTES + count * dim * 4) {
    throw new Error("payload length does not match header");
  }
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  const rows: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    const row = new Float32Array(dim);
    for (let j = 0; j < dim; j++) row[j] = view.getFloat32((i * dim + j) * 4, true);
    rows.push(row);
  }
  return { count, dim, rows };
}

export interface Sidecar {
  class_names: string[];
  labels?: number[];
  fewshot_indices?: number[];
}

export function writeSidecar(path: string, sidecar: Sidecar): void {
  const doc: Record<string, unknown> = { class_names: sidecar.class_names };
  if (sidecar.labels) doc.labels = sidecar.labels;
  if (sidecar.fewshot_indices) doc.fewshot_indices = sidecar.fewshot_indices;
  writeFileSync(path, JSON.stringify(doc, Object.keys(doc).sort(), 2) + "\n");
}

export function unitNormalize(vec: Float32Array): Float32Array {
  let sq = 0;
  for (let i = 0; i < vec.length; i++) sq += vec[i] * vec[i];
  const norm = Math.sqrt(sq);
  if (norm === 0) throw new Error("cannot normalize a zero vector");
  const out = new Float32Array(vec.length);
  for (let i = 0; i < vec.length; i++) out[i] = vec[i] / norm;
  return out;
}

export function meanVector(rows: Float32Array[], dim: number): Float32Array {
  if (rows.length === 0) throw new Error("mean of an empty set");
  const out = new Float32Array(dim);
  for (const row of rows) {
    for (let i = 0; i < dim; i++) out[i] += row[i];
  }
  for (let i = 0; i < dim; i++) out[i] /= rows.length;
  return out;
}
