/**
 * Deterministic SVG assembly: fixed fonts and sizes, fixed number
 * formatting, no timestamps, so identical inputs give identical bytes.
 */

import { encodePng } from "./png.js";
import { MASKED_COLOR, Rgb } from "./colormap.js";

export const FONT = "font-family=\"DejaVu Sans, sans-serif\"";

export function fmt(value: number): string {
  if (!Number.isFinite(value)) return "0";
  const rounded = Number(value.toFixed(2));
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

/** Spaced tick values covering [lo, hi] at a round step (1/2/5 ladder). */
export function ticks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / target;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power;
  for (const mult of [1, 2, 5, 10]) {
    if (mult * power >= rawStep) {
      step = mult * power;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export interface Rect {
  x: number;
  y: number;
  width: number;
  height: number;
}

/** Linear map from data coordinates to a plot rectangle (y grows upward). */
export class Scale {
  constructor(
    readonly rect: Rect,
    readonly xLo: number,
    readonly xHi: number,
    readonly yLo: number,
    readonly yHi: number,
  ) {}

  px(x: number): number {
    return this.rect.x + ((x - this.xLo) / (this.xHi - this.xLo)) * this.rect.width;
  }

  py(y: number): number {
    return this.rect.y + this.rect.height
      - ((y - this.yLo) / (this.yHi - this.yLo)) * this.rect.height;
  }
}

export class SvgDocument {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}">`,
      `<rect x="0" y="0" width="${width}" height="${height}" fill="white"/>`,
    );
  }

  raw(markup: string): void {
    this.parts.push(markup);
  }

  text(x: number, y: number, content: string, size = 11, anchor = "start",
       rotate = 0): void {
    const transform = rotate !== 0
      ? ` transform="rotate(${rotate} ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" ${FONT} font-size="${size}" ` +
        `text-anchor="${anchor}"${transform}>${escapeXml(content)}</text>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke = "black",
       width = 1): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  path(points: [number, number][], stroke: string, width = 1.5): void {
    if (points.length === 0) return;
    const d = points
      .map(([x, y], k) => `${k === 0 ? "M" : "L"}${fmt(x)} ${fmt(y)}`)
      .join(" ");
    this.parts.push(
      `<path d="${d}" fill="none" stroke="${stroke}" stroke-width="${width}"/>`,
    );
  }

  /** Embed a raster as a base64 PNG stretched over the rectangle. */
  image(rect: Rect, width: number, height: number, pixels: Uint8Array): void {
    const png = encodePng(width, height, pixels).toString("base64");
    this.parts.push(
      `<image x="${fmt(rect.x)}" y="${fmt(rect.y)}" width="${fmt(rect.width)}" ` +
        `height="${fmt(rect.height)}" preserveAspectRatio="none" ` +
        `image-rendering="pixelated" href="data:image/png;base64,${png}"/>`,
    );
  }

  frame(rect: Rect): void {
    this.parts.push(
      `<rect x="${fmt(rect.x)}" y="${fmt(rect.y)}" width="${fmt(rect.width)}" ` +
        `height="${fmt(rect.height)}" fill="none" stroke="black" stroke-width="1"/>`,
    );
  }

  xAxis(scale: Scale, label: string): void {
    const { rect } = scale;
    for (const value of ticks(scale.xLo, scale.xHi)) {
      const x = scale.px(value);
      this.line(x, rect.y + rect.height, x, rect.y + rect.height + 4);
      this.text(x, rect.y + rect.height + 16, fmt(value), 10, "middle");
    }
    this.text(rect.x + rect.width / 2, rect.y + rect.height + 30, label, 12, "middle");
  }

  yAxis(scale: Scale, label: string): void {
    const { rect } = scale;
    for (const value of ticks(scale.yLo, scale.yHi)) {
      const y = scale.py(value);
      this.line(rect.x - 4, y, rect.x, y);
      this.text(rect.x - 7, y + 3.5, fmt(value), 10, "end");
    }
    this.text(rect.x - 38, rect.y + rect.height / 2, label, 12, "middle", -90);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

/**
 * Rasterize a 2D field (row index = first axis) into RGB pixels with the
 * first axis pointing up; NaN entries use the masked color.
 */
export function rasterize(
  values: Float64Array,
  rows: number,
  cols: number,
  lo: number,
  hi: number,
  colormap: (t: number) => Rgb,
  transpose = false,
): { width: number; height: number; pixels: Uint8Array } {
  const width = transpose ? rows : cols;
  const height = transpose ? cols : rows;
  const pixels = new Uint8Array(width * height * 3);
  const span = hi - lo > 0 ? hi - lo : 1;
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const value = values[r * cols + c];
      // vertical axis points up: last row of pixels is the first data row
      const px = transpose ? r : c;
      const py = transpose ? cols - 1 - c : rows - 1 - r;
      const offset = (py * width + px) * 3;
      const color = Number.isNaN(value)
        ? MASKED_COLOR
        : colormap((value - lo) / span);
      pixels[offset] = color[0];
      pixels[offset + 1] = color[1];
      pixels[offset + 2] = color[2];
    }
  }
  return { width, height, pixels };
}
