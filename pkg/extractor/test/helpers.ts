import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { PNG } from "pngjs";

/** Solid-color PNG with a per-image brightness tweak so features differ. */
export function writePng(path: string, rgb: [number, number, number], size = 16, jitter = 0): void {
  const png = new PNG({ width: size, height: size });
  for (let i = 0; i < size * size; i++) {
    png.data[i * 4] = Math.min(255, rgb[0] + jitter);
    png.data[i * 4 + 1] = Math.min(255, rgb[1] + jitter);
    png.data[i * 4 + 2] = Math.min(255, rgb[2] + ((i * 7) % 23));
    png.data[i * 4 + 3] = 255;
  }
  writeFileSync(path, PNG.sync.write(png));
}

export interface TinyDataset {
  root: string;
  classNames: string[];
  perClass: number;
}

export function makeTinyDataset(base: string, perClass = 6): TinyDataset {
  const root = join(base, "images");
  const classNames = ["brick", "grass", "sky"];
  const colors: [number, number, number][] = [
    [180, 60, 40],
    [40, 160, 50],
    [90, 140, 230],
  ];
  classNames.forEach((name, c) => {
    mkdirSync(join(root, name), { recursive: true });
    for (let i = 0; i < perClass; i++) {
      writePng(join(root, name, `img_${String(i).padStart(2, "0")}.png`), colors[c], 16, i * 9);
    }
  });
  return { root, classNames, perClass };
}

export function manifestFor(base: string, ds: TinyDataset, overrides: Record<string, unknown> = {}) {
  return {
    dataset_root: ds.root,
    prompt_templates: ["a photo of {}", "a close-up of {}"],
    encoder: "hash",
    outputs: {
      prototypes: join(base, "prototypes.eclp"),
      test: join(base, "test.eclp"),
      fewshot: join(base, "fewshot.eclp"),
      sidecar: join(base, "sidecar.json"),
      log: join(base, "extract.log.json"),
    },
    ...overrides,
  };
}
