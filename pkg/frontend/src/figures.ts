/**
 * Figure builders working purely from the run-directory file contract:
 * density carpets, correlation-snapshot grids, overlap curves and
 * single-shot averaging panels.
 */

import { coolwarm, viridis } from "./colormap.js";
import { IncompleteManifestError, UsageError } from "./errors.js";
import { Field, RunDirectory } from "./io.js";
import { Rect, Scale, SvgDocument, fmt, rasterize } from "./svg.js";

export type FigureKind = "carpet" | "corr-grid" | "lambda" | "shots";

export interface FigureSpec {
  manifestPath: string;
  kind: FigureKind;
  outPath: string;
  snapshots?: number[];
  solver?: "ci" | "hf";
  vMin?: number;
  vMax?: number;
}

const MARGIN = { left: 62, right: 24, top: 34, bottom: 48 };
const PANEL_GAP = 26;

function finiteExtent(values: Float64Array): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(hi > lo)) {
    lo = 0;
    hi = 1;
  }
  return [lo, hi];
}

function heatPanel(
  doc: SvgDocument,
  rect: Rect,
  field: Field,
  lo: number,
  hi: number,
  diverging: boolean,
  transpose: boolean,
): void {
  const [rows, cols] = field.shape;
  const raster = rasterize(
    field.values, rows, cols, lo, hi, diverging ? coolwarm : viridis, transpose,
  );
  doc.image(rect, raster.width, raster.height, raster.pixels);
  doc.frame(rect);
}

function colorbar(doc: SvgDocument, rect: Rect, lo: number, hi: number,
                  diverging: boolean): void {
  const steps = 64;
  const pixels = new Uint8Array(steps * 3);
  for (let k = 0; k < steps; k++) {
    const color = (diverging ? coolwarm : viridis)(1 - k / (steps - 1));
    pixels.set(color, k * 3);
  }
  doc.image(rect, 1, steps, pixels);
  doc.frame(rect);
  doc.text(rect.x + rect.width + 4, rect.y + 8, fmt(hi), 9);
  doc.text(rect.x + rect.width + 4, rect.y + rect.height, fmt(lo), 9);
}

export function renderCarpet(run: RunDirectory, spec: FigureSpec): string {
  const solver = spec.solver ?? (run.has("ci_density_a") ? "ci" : "hf");
  const logicalA = `${solver}_density_a`;
  const logicalB = `${solver}_density_b`;
  for (const logical of [logicalA, logicalB]) {
    if (!run.has(logical)) {
      throw new IncompleteManifestError(
        `manifest lacks "${logical}" needed for the carpet figure`,
      );
    }
  }
  const fieldA = run.readField(logicalA);
  const fieldB = run.readField(logicalB);
  const panelW = 360;
  const panelH = 300;
  const width = MARGIN.left + 2 * panelW + PANEL_GAP + 46 + MARGIN.right;
  const height = MARGIN.top + panelH + MARGIN.bottom;
  const doc = new SvgDocument(width, height);
  const lo = spec.vMin ?? 0;
  const hi = spec.vMax ?? Math.max(
    finiteExtent(fieldA.values)[1], finiteExtent(fieldB.values)[1],
  );
  const labels = ["species A", "species B"];
  [fieldA, fieldB].forEach((field, k) => {
    const rect: Rect = {
      x: MARGIN.left + k * (panelW + PANEL_GAP),
      y: MARGIN.top,
      width: panelW,
      height: panelH,
    };
    heatPanel(doc, rect, field, lo, hi, false, true);
    const times = field.axes[0].values;
    const positions = field.axes[1].values;
    const scale = new Scale(
      rect, times[0], times[times.length - 1],
      positions[0], positions[positions.length - 1],
    );
    doc.xAxis(scale, "time");
    if (k === 0) doc.yAxis(scale, "x");
    doc.text(rect.x + rect.width / 2, MARGIN.top - 10,
             `${solver.toUpperCase()} density, ${labels[k]}`, 12, "middle");
  });
  colorbar(doc, {
    x: MARGIN.left + 2 * panelW + PANEL_GAP + 12,
    y: MARGIN.top, width: 14, height: panelH,
  }, lo, hi, false);
  return doc.render();
}

interface SnapshotEntry {
  index: string;
  time: number;
}

function discoverSnapshots(run: RunDirectory): SnapshotEntry[] {
  const entries: SnapshotEntry[] = [];
  for (const logical of run.logicalNames()) {
    const match = logical.match(/^ci_snap(\d+)_g1_a$/);
    if (match) {
      const field = run.readField(logical);
      entries.push({
        index: match[1],
        time: Number(field.meta?.["time"] ?? NaN),
      });
    }
  }
  entries.sort((a, b) => a.time - b.time);
  return entries;
}

export function renderCorrGrid(run: RunDirectory, spec: FigureSpec): string {
  let snapshots = discoverSnapshots(run);
  if (snapshots.length === 0) {
    throw new IncompleteManifestError(
      "manifest holds no correlation snapshots (ci_snapNN_* entries)",
    );
  }
  if (spec.snapshots !== undefined && spec.snapshots.length > 0) {
    snapshots = snapshots.filter((s) =>
      spec.snapshots!.some((t) => Math.abs(t - s.time) < 1e-6),
    );
    if (snapshots.length === 0) {
      throw new UsageError("no correlation snapshot matches --snap");
    }
  }
  const rowKinds = [
    { suffix: "g1_a", label: "|g1| A", diverging: false, lo: 0, hi: 1 },
    { suffix: "g1_b", label: "|g1| B", diverging: false, lo: 0, hi: 1 },
    { suffix: "g2_aa", label: "g2 AA", diverging: true, lo: 0, hi: 2 },
    { suffix: "g2_ab", label: "g2 AB", diverging: true, lo: 0, hi: 2 },
  ].filter((row) => snapshots.every((s) => run.has(`ci_snap${s.index}_${row.suffix}`)));
  if (rowKinds.length === 0) {
    throw new IncompleteManifestError("snapshots lack correlation maps");
  }
  const panel = 170;
  const width = MARGIN.left + snapshots.length * (panel + 14) + 52 + MARGIN.right;
  const height = MARGIN.top + rowKinds.length * (panel + 30) + MARGIN.bottom - 16;
  const doc = new SvgDocument(width, height);
  rowKinds.forEach((row, r) => {
    snapshots.forEach((snap, c) => {
      const field = run.readField(`ci_snap${snap.index}_${row.suffix}`);
      const rect: Rect = {
        x: MARGIN.left + c * (panel + 14),
        y: MARGIN.top + r * (panel + 30),
        width: panel,
        height: panel,
      };
      const lo = spec.vMin ?? row.lo;
      const hi = spec.vMax ?? row.hi;
      heatPanel(doc, rect, field, lo, hi, row.diverging, false);
      if (r === 0) {
        doc.text(rect.x + panel / 2, rect.y - 8, `t = ${fmt(snap.time)}`, 11, "middle");
      }
      if (c === 0) {
        doc.text(rect.x - 40, rect.y + panel / 2, row.label, 11, "middle", -90);
      }
      const axis = field.axes[0].values;
      const scale = new Scale(rect, axis[0], axis[axis.length - 1],
                              axis[0], axis[axis.length - 1]);
      if (r === rowKinds.length - 1) doc.xAxis(scale, "x'");
    });
    const barRect: Rect = {
      x: MARGIN.left + snapshots.length * (panel + 14) + 8,
      y: MARGIN.top + r * (panel + 30),
      width: 12,
      height: panel,
    };
    colorbar(doc, barRect, spec.vMin ?? row.lo, spec.vMax ?? row.hi, row.diverging);
  });
  return doc.render();
}

export function renderLambda(run: RunDirectory, spec: FigureSpec): string {
  const curves: { label: string; color: string; times: Float64Array; lam: Float64Array }[] = [];
  for (const [tag, color] of [["ci", "#1f6fb4"], ["hf", "#d1351b"]] as const) {
    const logical = `${tag}_series`;
    if (!run.has(logical)) continue;
    const series = run.readSeries(logical);
    const times = series.columns.get("time");
    const lam = series.columns.get("lambda");
    if (times === undefined || lam === undefined) {
      throw new IncompleteManifestError(`${logical} lacks time/lambda columns`);
    }
    curves.push({ label: tag.toUpperCase(), color, times, lam });
  }
  if (curves.length === 0) {
    throw new IncompleteManifestError("manifest holds no scalar series");
  }
  const rect: Rect = { x: MARGIN.left, y: MARGIN.top, width: 560, height: 300 };
  const doc = new SvgDocument(rect.width + MARGIN.left + MARGIN.right,
                              rect.height + MARGIN.top + MARGIN.bottom);
  const tMax = Math.max(...curves.map((c) => c.times[c.times.length - 1]));
  const scale = new Scale(rect, 0, tMax, 0, 1.05);
  doc.frame(rect);
  doc.xAxis(scale, "time");
  doc.yAxis(scale, "density overlap");
  curves.forEach((curve, k) => {
    const points: [number, number][] = [];
    for (let i = 0; i < curve.times.length; i++) {
      points.push([scale.px(curve.times[i]), scale.py(curve.lam[i])]);
    }
    doc.path(points, curve.color);
    doc.text(rect.x + rect.width - 70, rect.y + 18 + 16 * k, curve.label, 11);
    doc.line(rect.x + rect.width - 95, rect.y + 14 + 16 * k,
             rect.x + rect.width - 75, rect.y + 14 + 16 * k, curve.color, 2);
  });
  return doc.render();
}

function discoverShotTimes(run: RunDirectory): string[] {
  const labels = new Set<string>();
  for (const logical of run.logicalNames()) {
    const match = logical.match(/^shots_t(.+)_avg_a_n(\d+)$/);
    if (match) labels.add(match[1]);
  }
  return [...labels].sort((a, b) => Number(a) - Number(b));
}

export function renderShots(run: RunDirectory, spec: FigureSpec): string {
  const labels = discoverShotTimes(run);
  if (labels.length === 0) {
    throw new IncompleteManifestError("manifest holds no single-shot archive");
  }
  let label = labels[0];
  if (spec.snapshots !== undefined && spec.snapshots.length > 0) {
    const wanted = spec.snapshots[0];
    const found = labels.find((l) => Math.abs(Number(l) - wanted) < 1e-6);
    if (found === undefined) {
      throw new UsageError(`no shot archive at t=${wanted} (have ${labels.join(", ")})`);
    }
    label = found;
  }
  const counts: number[] = [];
  for (const logical of run.logicalNames()) {
    const match = logical.match(new RegExp(`^shots_t${label}_avg_a_n(\\d+)$`));
    if (match) counts.push(Number(match[1]));
  }
  counts.sort((a, b) => a - b);
  const shown = counts.filter((n, k) => k < 3 || n === counts[counts.length - 1]).slice(0, 3);
  const rows = [...shown.map((n) => ({ title: `average of ${n}`, logical: (s: string) => `shots_t${label}_avg_${s}_n${n}` })),
                { title: "one-body density", logical: (s: string) => `shots_t${label}_density_${s}` }];
  const panelW = 300;
  const panelH = 130;
  const width = MARGIN.left + 2 * panelW + PANEL_GAP + MARGIN.right;
  const height = MARGIN.top + rows.length * (panelH + 34) + MARGIN.bottom - 20;
  const doc = new SvgDocument(width, height);
  doc.text(width / 2, 16, `single-shot averaging at t = ${label}`, 12, "middle");
  (["a", "b"] as const).forEach((species, column) => {
    rows.forEach((row, r) => {
      const logical = row.logical(species);
      if (!run.has(logical)) {
        throw new IncompleteManifestError(`manifest lacks "${logical}"`);
      }
      const field = run.readField(logical);
      const axis = field.axes[0].values;
      const rect: Rect = {
        x: MARGIN.left + column * (panelW + PANEL_GAP),
        y: MARGIN.top + r * (panelH + 34),
        width: panelW,
        height: panelH,
      };
      const [, hi] = finiteExtent(field.values);
      const scale = new Scale(rect, axis[0], axis[axis.length - 1], 0, hi * 1.08);
      doc.frame(rect);
      const points: [number, number][] = [];
      for (let i = 0; i < axis.length; i++) {
        points.push([scale.px(axis[i]), scale.py(field.values[i])]);
      }
      doc.path(points, column === 0 ? "#1f6fb4" : "#d1351b");
      doc.text(rect.x + 6, rect.y + 14,
               `${row.title}, species ${species.toUpperCase()}`, 10);
      if (r === rows.length - 1) doc.xAxis(scale, "x");
    });
  });
  return doc.render();
}

export function renderFigure(spec: FigureSpec): string {
  const run = new RunDirectory(spec.manifestPath);
  switch (spec.kind) {
    case "carpet":
      return renderCarpet(run, spec);
    case "corr-grid":
      return renderCorrGrid(run, spec);
    case "lambda":
      return renderLambda(run, spec);
    case "shots":
      return renderShots(run, spec);
    default:
      throw new UsageError(`unknown figure kind "${spec.kind}"`);
  }
}
