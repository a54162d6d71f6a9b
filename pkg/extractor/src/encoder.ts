/**
 * Pluggable feature encoders.
 *
 * The default "hash" encoder runs everywhere with no model weights: image
 * features are block-averaged luminance patches (so visually distinct inputs
 * get distinct, stable features), text features are seeded pseudo-random
 * projections of the prompt string. Both are fully deterministic.
 *
 * The "clip:<model>" encoder wires a real vision-language model through
 * transformers.js for integration runs; it needs the package plus model
 * weights available locally and is not exercised by the test suite.
 */

import { createHash } from "node:crypto";

import type { DecodedImage } from "./images.js";
import { unitNormalize } from "./format.js";

export interface Encoder {
  readonly id: string;
  readonly dim: number;
  encodeImage(image: DecodedImage): Promise<Float32Array>;
  encodeText(prompt: string): Promise<Float32Array>;
}

const HASH_GRID = 8;

/** xorshift128 seeded from a sha256 digest; uniform in [0, 1). */
function seededUniforms(key: string, n: number): Float64Array {
  const digest = createHash("sha256").update(key).digest();
  let s0 = digest.readUInt32LE(0) || 1;
  let s1 = digest.readUInt32LE(4) || 2;
  let s2 = digest.readUInt32LE(8) || 3;
  let s3 = digest.readUInt32LE(12) || 4;
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const t = s1 << 9;
    s2 ^= s0;
    s3 ^= s1;
    s1 ^= s2;
    s0 ^= s3;
    s2 ^= t;
    s3 = (s3 << 11) | (s3 >>> 21);
    out[i] = (s0 >>> 0) / 4294967296;
  }
  return out;
}

export class HashEncoder implements Encoder {
  readonly id: string;
  readonly dim: number;

  constructor(dim = 64) {
    if (dim < HASH_GRID * HASH_GRID) {
      throw new Error(`hash encoder needs dim >= ${HASH_GRID * HASH_GRID}`);
    }
    this.dim = dim;
    this.id = `hash-${dim}`;
  }

  async encodeImage(image: DecodedImage): Promise<Float32Array> {
    const vec = new Float32Array(this.dim);
    const { width, height, pixels } = image;
    // block-averaged luminance grid, centered to [-0.5, 0.5]
    for (let gy = 0; gy < HASH_GRID; gy++) {
      for (let gx = 0; gx < HASH_GRID; gx++) {
        const x0 = Math.floor((gx * width) / HASH_GRID);
        const x1 = Math.max(x0 + 1, Math.floor(((gx + 1) * width) / HASH_GRID));
        const y0 = Math.floor((gy * height) / HASH_GRID);
        const y1 = Math.max(y0 + 1, Math.floor(((gy + 1) * height) / HASH_GRID));
        let acc = 0;
        let count = 0;
        for (let y = y0; y < y1 && y < height; y++) {
          for (let x = x0; x < x1 && x < width; x++) {
            const p = (y * width + x) * 4;
            acc += 0.299 * pixels[p] + 0.587 * pixels[p + 1] + 0.114 * pixels[p + 2];
            count++;
          }
        }
        vec[gy * HASH_GRID + gx] = count ? acc / count / 255 - 0.5 : 0;
      }
    }
    // remaining dimensions: stable content hash so equal images stay equal
    if (this.dim > HASH_GRID * HASH_GRID) {
      const key = createHash("sha256").update(Buffer.from(pixels.buffer, pixels.byteOffset, pixels.byteLength)).digest("hex");
      const extra = seededUniforms(`image:${key}`, this.dim - HASH_GRID * HASH_GRID);
      for (let i = 0; i < extra.length; i++) vec[HASH_GRID * HASH_GRID + i] = (extra[i] - 0.5) * 0.1;
    }
    return unitNormalize(vec);
  }

  async encodeText(prompt: string): Promise<Float32Array> {
    const uniforms = seededUniforms(`text:${prompt}`, this.dim);
    const vec = new Float32Array(this.dim);
    for (let i = 0; i < this.dim; i++) vec[i] = uniforms[i] - 0.5;
    return unitNormalize(vec);
  }
}

class ClipEncoder implements Encoder {
  readonly id: string;
  readonly dim: number;
  private readonly imagePipe: any;
  private readonly textPipe: any;

  constructor(id: string, dim: number, imagePipe: any, textPipe: any) {
    this.id = id;
    this.dim = dim;
    this.imagePipe = imagePipe;
    this.textPipe = textPipe;
  }

  async encodeImage(image: DecodedImage): Promise<Float32Array> {
    const out = await this.imagePipe(image, { pooling: "mean", normalize: true });
    return Float32Array.from(out.data as Float32Array);
  }

  async encodeText(prompt: string): Promise<Float32Array> {
    const out = await this.textPipe(prompt, { pooling: "mean", normalize: true });
    return Float32Array.from(out.data as Float32Array);
  }
}

export async function loadEncoder(spec: string): Promise<Encoder> {
  if (spec === "hash" || spec.startsWith("hash-")) {
    const dim = spec === "hash" ? 64 : Number(spec.slice("hash-".length));
    return new HashEncoder(dim);
  }
  if (spec.startsWith("clip:")) {
    const model = spec.slice("clip:".length);
    const moduleName = "@xenova/transformers";
    let mod: any;
    try {
      mod = await import(moduleName);
    } catch {
      throw new Error(
        `encoder "${spec}" needs the ${moduleName} package and local model weights; ` +
          `install them or use the built-in "hash" encoder`
      );
    }
    const imagePipe = await mod.pipeline("image-feature-extraction", model);
    const textPipe = await mod.pipeline("feature-extraction", model);
    const probe = await textPipe("probe", { pooling: "mean", normalize: true });
    return new ClipEncoder(spec, probe.data.length, imagePipe, textPipe);
  }
  throw new Error(`unknown encoder "${spec}" (expected "hash", "hash-<dim>" or "clip:<model>")`);
}
