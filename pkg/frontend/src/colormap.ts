/** Viridis colormap (perceptually uniform), sampled at 16 anchors. */

const ANCHORS: [number, number, number][] = [
  [68, 1, 84], [72, 26, 108], [71, 47, 125], [65, 68, 135],
  [57, 86, 140], [49, 104, 142], [42, 120, 142], [35, 136, 142],
  [31, 152, 139], [34, 168, 132], [53, 183, 121], [84, 197, 104],
  [122, 209, 81], [165, 219, 54], [210, 226, 27], [253, 231, 37],
];

export function viridis(t: number): string {
  const u = Math.min(1, Math.max(0, t)) * (ANCHORS.length - 1);
  const i = Math.min(ANCHORS.length - 2, Math.floor(u));
  const f = u - i;
  const c = ANCHORS[i].map((a, k) => Math.round(a + f * (ANCHORS[i + 1][k] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

export interface ColorScale {
  lo: number;
  hi: number;
  color(v: number): string;
}

export function makeScale(lo: number, hi: number): ColorScale {
  if (!(lo < hi)) {
    throw new Error(`color bounds must satisfy lo < hi, got [${lo}, ${hi}]`);
  }
  return {
    lo,
    hi,
    color: (v: number) => viridis((v - lo) / (hi - lo)),
  };
}
