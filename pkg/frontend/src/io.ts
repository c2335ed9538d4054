/**
 * Readers for the simulator's run-directory contract: manifest.json with a
 * logical-name file index, CSV scalar series, and raw little-endian float64
 * fields with JSON sidecars.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { IncompleteManifestError, MissingFileError } from "./errors.js";

export interface ManifestFile {
  path: string;
  kind: string;
  sha256?: string;
}

export interface Manifest {
  format: string;
  status: string;
  files: Record<string, ManifestFile>;
  config?: unknown;
}

export interface Field {
  shape: number[];
  values: Float64Array;
  axes: { name: string; values: number[] }[];
  meta?: Record<string, unknown>;
}

export interface Series {
  names: string[];
  columns: Map<string, Float64Array>;
}

export class RunDirectory {
  readonly root: string;
  readonly manifest: Manifest;

  constructor(manifestPath: string) {
    if (!fs.existsSync(manifestPath)) {
      throw new MissingFileError(`manifest not found: ${manifestPath}`);
    }
    this.root = path.dirname(manifestPath);
    const parsed = JSON.parse(fs.readFileSync(manifestPath, "utf-8"));
    if (typeof parsed !== "object" || parsed === null || !("files" in parsed)) {
      throw new IncompleteManifestError(`not a run manifest: ${manifestPath}`);
    }
    this.manifest = parsed as Manifest;
    if (this.manifest.status !== "complete") {
      throw new IncompleteManifestError(
        `manifest status is "${this.manifest.status}", expected "complete"`,
      );
    }
  }

  logicalNames(): string[] {
    return Object.keys(this.manifest.files).sort();
  }

  has(logical: string): boolean {
    return logical in this.manifest.files;
  }

  resolve(logical: string): string {
    const entry = this.manifest.files[logical];
    if (entry === undefined) {
      throw new IncompleteManifestError(
        `manifest has no entry for "${logical}"`,
      );
    }
    const full = path.join(this.root, entry.path);
    if (!fs.existsSync(full)) {
      throw new MissingFileError(`file listed in manifest is missing: ${full}`);
    }
    return full;
  }

  readSeries(logical: string): Series {
    return readCsv(this.resolve(logical));
  }

  readField(logical: string): Field {
    const dataPath = this.resolve(logical);
    return readField(dataPath.replace(/\.f64$/, ""));
  }
}

export function readCsv(filePath: string): Series {
  const text = fs.readFileSync(filePath, "utf-8").trimEnd();
  const lines = text.length > 0 ? text.split("\n") : [];
  if (lines.length === 0) {
    throw new MissingFileError(`empty CSV: ${filePath}`);
  }
  const names = lines[0].split(",");
  const rows = lines.slice(1);
  const columns = new Map<string, Float64Array>();
  names.forEach((name, k) => {
    const column = new Float64Array(rows.length);
    rows.forEach((line, r) => {
      column[r] = Number(line.split(",")[k]);
    });
    columns.set(name, column);
  });
  return { names, columns };
}

export function readField(basePath: string): Field {
  const sidecarPath = `${basePath}.json`;
  const dataPath = `${basePath}.f64`;
  for (const p of [sidecarPath, dataPath]) {
    if (!fs.existsSync(p)) {
      throw new MissingFileError(`field file missing: ${p}`);
    }
  }
  const sidecar = JSON.parse(fs.readFileSync(sidecarPath, "utf-8"));
  const raw = fs.readFileSync(dataPath);
  const values = new Float64Array(
    raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength),
  );
  const expected = (sidecar.shape as number[]).reduce((a, b) => a * b, 1);
  if (values.length !== expected) {
    throw new MissingFileError(
      `field ${dataPath} holds ${values.length} values, sidecar says ${expected}`,
    );
  }
  return {
    shape: sidecar.shape,
    values,
    axes: sidecar.axes,
    meta: sidecar.meta,
  };
}
