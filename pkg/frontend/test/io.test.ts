import { describe, expect, it } from "vitest";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { IncompleteManifestError, MissingFileError } from "../src/errors.js";
import { RunDirectory, readCsv, readField } from "../src/io.js";

const FIXTURE = path.join(__dirname, "fixtures", "p1", "manifest.json");

describe("run directory", () => {
  it("loads the fixture manifest and resolves files", () => {
    const run = new RunDirectory(FIXTURE);
    expect(run.manifest.status).toBe("complete");
    expect(run.has("ci_series")).toBe(true);
    const series = run.readSeries("ci_series");
    expect(series.names[0]).toBe("time");
    const times = series.columns.get("time")!;
    expect(times[0]).toBe(0);
    const lambda = series.columns.get("lambda")!;
    expect(Math.max(...lambda)).toBeLessThanOrEqual(1.0 + 1e-9);
  });

  it("reads fields with matching sidecar axes", () => {
    const run = new RunDirectory(FIXTURE);
    const field = run.readField("ci_density_a");
    expect(field.shape.length).toBe(2);
    expect(field.axes[0].name).toBe("time");
    expect(field.axes[1].values.length).toBe(field.shape[1]);
    // densities integrate to the particle number (N_A = 3)
    const weight = field.axes[1].values[1] - field.axes[1].values[0];
    let sum = 0;
    for (let k = 0; k < field.shape[1]; k++) sum += field.values[k];
    expect(sum * weight).toBeCloseTo(3.0, 4);
  });

  it("raises the documented errors", () => {
    expect(() => new RunDirectory("/nope/manifest.json")).toThrow(MissingFileError);
    const run = new RunDirectory(FIXTURE);
    expect(() => run.resolve("not_a_logical_name")).toThrow(IncompleteManifestError);
  });

  it("rejects incomplete manifests", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "viz-"));
    const manifest = JSON.parse(fs.readFileSync(FIXTURE, "utf-8"));
    manifest.status = "incomplete";
    fs.writeFileSync(path.join(dir, "manifest.json"), JSON.stringify(manifest));
    expect(() => new RunDirectory(path.join(dir, "manifest.json"))).toThrow(
      IncompleteManifestError,
    );
  });

  it("detects missing payload files", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "viz-"));
    const manifest = JSON.parse(fs.readFileSync(FIXTURE, "utf-8"));
    fs.writeFileSync(path.join(dir, "manifest.json"), JSON.stringify(manifest));
    const run = new RunDirectory(path.join(dir, "manifest.json"));
    expect(() => run.resolve("ci_series")).toThrow(MissingFileError);
  });
});

describe("csv/field readers", () => {
  it("parses CSV columns", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "viz-"));
    const file = path.join(dir, "s.csv");
    fs.writeFileSync(file, "a,b\n1,4\n2.5,-3\n");
    const series = readCsv(file);
    expect([...series.columns.get("a")!]).toEqual([1, 2.5]);
    expect([...series.columns.get("b")!]).toEqual([4, -3]);
  });

  it("validates field payload size", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "viz-"));
    fs.writeFileSync(path.join(dir, "f.json"), JSON.stringify({
      dtype: "<f8", order: "C", shape: [4],
      axes: [{ name: "x", values: [0, 1, 2, 3] }],
    }));
    fs.writeFileSync(path.join(dir, "f.f64"), Buffer.alloc(8 * 3));
    expect(() => readField(path.join(dir, "f"))).toThrow(MissingFileError);
  });
});
