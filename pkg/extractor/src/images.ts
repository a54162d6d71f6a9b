/** Dataset folder scanning and image decoding (PNG/JPEG). */

import { readdirSync, readFileSync, statSync } from "node:fs";
import { join } from "node:path";

import jpeg from "jpeg-js";
import { PNG } from "pngjs";

export interface DecodedImage {
  width: number;
  height: number;
  /** RGBA, 4 bytes per pixel. */
  pixels: Uint8Array;
}

export class DecodeError extends Error {}

const EXTENSIONS = new Set([".png", ".jpg", ".jpeg"]);

function extension(name: string): string {
  const dot = name.lastIndexOf(".");
  return dot < 0 ? "" : name.slice(dot).toLowerCase();
}

export function decodeImageFile(path: string): DecodedImage {
  const blob = readFileSync(path);
  try {
    if (extension(path) === ".png") {
      const png = PNG.sync.read(blob);
      return { width: png.width, height: png.height, pixels: new Uint8Array(png.data) };
    }
    const img = jpeg.decode(blob, { useTArray: true, maxMemoryUsageInMB: 512 });
    return { width: img.width, height: img.height, pixels: new Uint8Array(img.data) };
  } catch (err) {
    throw new DecodeError(`cannot decode ${path}: ${(err as Error).message}`);
  }
}

export interface ClassImages {
  className: string;
  files: string[];
}

/**
 * One subdirectory per class under the dataset root; files are returned in
 * sorted-name order, which doubles as the split ordering for few-shot
 * selection.
 */
export function scanDataset(root: string, classNames: string[]): ClassImages[] {
  return classNames.map((className) => {
    const dir = join(root, className);
    let entries: string[];
    try {
      entries = readdirSync(dir);
    } catch {
      throw new Error(`class directory missing: ${dir}`);
    }
    const files = entries
      .filter((name) => EXTENSIONS.has(extension(name)))
      .sort()
      .map((name) => join(dir, name));
    return { className, files };
  });
}

export function listClassDirs(root: string): string[] {
  return readdirSync(root)
    .filter((name) => {
      try {
        return statSync(join(root, name)).isDirectory();
      } catch {
        return false;
      }
    })
    .sort();
}
