#!/usr/bin/env node
/** CLI: `extract --manifest manifest.json [--encoder hash] [--seed 0]`. */

import { extract } from "./extract.js";
import { loadManifest } from "./manifest.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument ${arg}`);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) throw new Error(`flag ${arg} needs a value`);
    out.set(arg.slice(2), value);
    i++;
  }
  return out;
}

async function main(): Promise<number> {
  const args = parseArgs(process.argv.slice(2));
  const manifestPath = args.get("manifest");
  if (!manifestPath) {
    console.error("usage: extract --manifest manifest.json [--encoder hash] [--seed N]");
    return 2;
  }
  const manifest = loadManifest(manifestPath);
  if (args.has("encoder")) manifest.encoder = args.get("encoder")!;
  if (args.has("seed")) manifest.seed = Number(args.get("seed"));

  const result = await extract(manifest);
  console.log(
    `encoded ${result.classNames.length} classes (dim ${result.dim}): ` +
      `${result.testCount} test rows, ${result.fewshotCount} few-shot rows`
  );
  if (result.skipped.length) console.log(`skipped ${result.skipped.length} undecodable file(s)`);
  console.log(`prototypes: ${manifest.outputs.prototypes}`);
  console.log(`test:       ${manifest.outputs.test}`);
  if (manifest.outputs.fewshot && result.fewshotCount) console.log(`fewshot:    ${manifest.outputs.fewshot}`);
  console.log(`sidecar:    ${manifest.outputs.sidecar}`);
  return 0;
}

main()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(`error: ${(err as Error).message}`);
    process.exit(1);
  });
