/** Perceptually ordered colormaps sampled by linear interpolation. */

export type Rgb = [number, number, number];

const VIRIDIS: Rgb[] = [
  [68, 1, 84],
  [72, 40, 120],
  [62, 74, 137],
  [49, 104, 142],
  [38, 130, 142],
  [31, 158, 137],
  [53, 183, 121],
  [109, 205, 89],
  [180, 222, 44],
  [253, 231, 37],
];

// Diverging map for correlation functions centered on one.
const COOLWARM: Rgb[] = [
  [59, 76, 192],
  [124, 159, 249],
  [192, 212, 245],
  [242, 242, 242],
  [245, 192, 157],
  [238, 126, 93],
  [180, 4, 38],
];

function sample(table: Rgb[], t: number): Rgb {
  const clamped = Math.min(1, Math.max(0, t));
  const scaled = clamped * (table.length - 1);
  const low = Math.floor(scaled);
  const high = Math.min(low + 1, table.length - 1);
  const frac = scaled - low;
  return [0, 1, 2].map((c) =>
    Math.round(table[low][c] * (1 - frac) + table[high][c] * frac),
  ) as Rgb;
}

export function viridis(t: number): Rgb {
  return sample(VIRIDIS, t);
}

export function coolwarm(t: number): Rgb {
  return sample(COOLWARM, t);
}

export const MASKED_COLOR: Rgb = [220, 220, 220];
