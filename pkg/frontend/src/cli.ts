#!/usr/bin/env node
/**
 * render --manifest PATH --kind carpet|corr-grid|lambda|shots --out PATH
 *        [--snap t1,t2,...] [--solver ci|hf] [--vmin V] [--vmax V]
 *
 * Exit codes: 0 success, 2 usage error, 3 missing/unreadable input file,
 * 4 incomplete manifest for the requested kind.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { EXIT_USAGE, UsageError } from "./errors.js";
import { FigureKind, FigureSpec, renderFigure } from "./figures.js";

const KINDS: FigureKind[] = ["carpet", "corr-grid", "lambda", "shots"];

function parseArgs(argv: string[]): FigureSpec {
  if (argv.length === 0 || argv[0] !== "render") {
    throw new UsageError("usage: fermiwell-viz render --manifest PATH --kind KIND --out PATH");
  }
  const options = new Map<string, string>();
  for (let k = 1; k < argv.length; k += 2) {
    const flag = argv[k];
    if (!flag.startsWith("--") || k + 1 >= argv.length) {
      throw new UsageError(`malformed option ${flag}`);
    }
    options.set(flag.slice(2), argv[k + 1]);
  }
  const manifestPath = options.get("manifest");
  const kind = options.get("kind") as FigureKind | undefined;
  const outPath = options.get("out");
  if (!manifestPath || !kind || !outPath) {
    throw new UsageError("--manifest, --kind and --out are all required");
  }
  if (!KINDS.includes(kind)) {
    throw new UsageError(`--kind must be one of ${KINDS.join("|")}`);
  }
  const spec: FigureSpec = { manifestPath, kind, outPath };
  const snap = options.get("snap");
  if (snap !== undefined) {
    spec.snapshots = snap.split(",").map((value) => {
      const parsed = Number(value);
      if (!Number.isFinite(parsed)) {
        throw new UsageError(`--snap entry "${value}" is not a number`);
      }
      return parsed;
    });
  }
  const solver = options.get("solver");
  if (solver !== undefined) {
    if (solver !== "ci" && solver !== "hf") {
      throw new UsageError("--solver must be ci or hf");
    }
    spec.solver = solver;
  }
  for (const bound of ["vmin", "vmax"] as const) {
    const value = options.get(bound);
    if (value !== undefined) {
      const parsed = Number(value);
      if (!Number.isFinite(parsed)) {
        throw new UsageError(`--${bound} must be a number`);
      }
      if (bound === "vmin") spec.vMin = parsed;
      else spec.vMax = parsed;
    }
  }
  return spec;
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
    const svg = renderFigure(spec);
    fs.mkdirSync(path.dirname(path.resolve(spec.outPath)), { recursive: true });
    fs.writeFileSync(spec.outPath, svg);
  } catch (error) {
    if (error instanceof Error && "exitCode" in error) {
      process.stderr.write(`${error.message}\n`);
      return (error as { exitCode: number }).exitCode;
    }
    if (error instanceof Error) {
      process.stderr.write(`usage error: ${error.message}\n`);
      return EXIT_USAGE;
    }
    throw error;
  }
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
