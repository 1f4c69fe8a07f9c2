/** The three figure kinds: deformed mesh with a density heatmap, the
 * undeformed mesh with pinned-node markers, and energy-vs-parameter
 * curves.  Elements are drawn as straight-edged quadrilaterals from their
 * corner deformations. */

import { ColorScale, makeScale, viridis } from "./colormap.js";
import { Extent, SvgCanvas } from "./svg.js";
import { DensityRow, EnergyTable, InputError, Snapshot, deformedCorners } from "./types.js";

/** Densities at or below this threshold render as "no contribution". */
export const DENSITY_FLOOR = 1e-12;
const ZERO_FILL = "#e8e8e8";

export interface PlotOptions {
  /** Fixed color scale bounds; auto-scaled from the data when omitted. */
  lo?: number;
  hi?: number;
  widthPx?: number;
}

function extentOf(points: Iterable<[number, number]>): Extent {
  let xmin = Infinity, xmax = -Infinity, ymin = Infinity, ymax = -Infinity;
  for (const [x, y] of points) {
    xmin = Math.min(xmin, x);
    xmax = Math.max(xmax, x);
    ymin = Math.min(ymin, y);
    ymax = Math.max(ymax, y);
  }
  const padX = 0.02 * (xmax - xmin || 1);
  const padY = 0.02 * (ymax - ymin || 1);
  return { xmin: xmin - padX, xmax: xmax + padX,
           ymin: ymin - padY, ymax: ymax + padY };
}

function colorbar(svg: SvgCanvas, scale: ColorScale): void {
  const x = svg.width - 28;
  const y0 = 30;
  const h = svg.height - 60;
  const steps = 64;
  for (let i = 0; i < steps; i++) {
    svg.rectPx(x, y0 + (h * (steps - 1 - i)) / steps, 14, h / steps + 1,
               viridis(i / (steps - 1)));
  }
  svg.textPx(x + 7, y0 - 8, scale.hi.toExponential(2), 10, "middle");
  svg.textPx(x + 7, y0 + h + 14, scale.lo.toExponential(2), 10, "middle");
}

/** Deformed configuration filled by the per-element marginal density. */
export function plotDeformedDensity(snap: Snapshot, density: DensityRow[],
                                    opts: PlotOptions = {}): string {
  if (density.length !== snap.elements.length) {
    throw new InputError(
      `density table has ${density.length} rows but the snapshot has ` +
      `${snap.elements.length} elements`);
  }
  const byElem = new Map(density.map((r) => [r.element_id, r.density]));
  const corners = snap.elements.map((_, e) => deformedCorners(snap, e));
  const svg = new SvgCanvas(extentOf(corners.flat()), opts.widthPx ?? 720);

  const values = density.map((r) => r.density);
  const hot = values.filter((v) => v > DENSITY_FLOOR);
  const lo = opts.lo ?? 0;
  const hi = opts.hi ?? (hot.length ? Math.max(...hot) : 1);
  const scale = makeScale(lo, hi === lo ? lo + 1 : hi);

  snap.elements.forEach((_, e) => {
    const d = byElem.get(e) ?? 0;
    const isHot = d > DENSITY_FLOOR;
    const fill = isHot ? scale.color(d) : ZERO_FILL;
    svg.polygon(corners[e], fill, "#555", 0.4,
                `class="elem ${isHot ? "hot" : "zero"}"`);
  });
  colorbar(svg, scale);
  return svg.render();
}

/** Undeformed mesh with boundary outline and pinned-node markers. */
export function plotMeshOverview(snap: Snapshot,
                                 opts: PlotOptions = {}): string {
  const svg = new SvgCanvas(extentOf(snap.nodes as [number, number][]),
                            opts.widthPx ?? 720);
  snap.elements.forEach((ids) => {
    const pts = ids.map((n) => snap.nodes[n] as [number, number]);
    svg.polygon(pts, "none", "#888", 0.6);
  });
  const pinned = snap.node_tags?.dirichlet ?? [];
  for (const n of pinned) {
    svg.circle(snap.nodes[n][0], snap.nodes[n][1], 4, "black");
  }
  return svg.render();
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  const span = hi - lo;
  if (!(span > 0)) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10(span / n)));
  const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= n) ?? 10;
  const s = step * mult;
  const first = Math.ceil(lo / s) * s;
  const ticks: number[] = [];
  for (let t = first; t <= hi + 1e-12 * span; t += s) ticks.push(t);
  return ticks;
}

/** Total energy and scaled penalty over the sweep parameter. */
export function plotEnergyCurve(table: EnergyTable,
                                opts: PlotOptions = {}): string {
  if (table.rows.length < 2) {
    throw new InputError("energy curve needs at least two sweep rows");
  }
  const values = table.rows.map((r) => r.value);
  const logX = Math.min(...values) > 0 &&
    Math.max(...values) / Math.min(...values) >= 100;
  const tx = (v: number) => (logX ? Math.log10(v) : v);

  const xs = values.map(tx);
  const totals = table.rows.map((r) => r.total);
  const pens = table.rows.map((r) => r.mu_E_cn);
  const ymin = Math.min(0, ...totals, ...pens);
  const ymax = Math.max(...totals, ...pens);
  const ext: Extent = { xmin: Math.min(...xs), xmax: Math.max(...xs),
                        ymin, ymax: ymax === ymin ? ymin + 1 : ymax };
  const padX = 0.05 * (ext.xmax - ext.xmin || 1);
  const padY = 0.08 * (ext.ymax - ext.ymin);
  ext.xmin -= padX; ext.xmax += padX; ext.ymin -= padY; ext.ymax += padY;
  const svg = new SvgCanvas(ext, opts.widthPx ?? 720);

  for (const t of niceTicks(ext.ymin, ext.ymax)) {
    const [x0, y] = svg.px(ext.xmin, t);
    const [x1] = svg.px(ext.xmax, t);
    svg.linePx(x0, y, x1, y, "#eee");
    svg.textPx(x0 - 4, y + 4, t.toPrecision(3), 9, "end");
  }
  const xticks = logX
    ? xs
    : niceTicks(Math.min(...xs), Math.max(...xs));
  for (const t of xticks) {
    const [x, y0] = svg.px(t, ext.ymin);
    const [, y1] = svg.px(t, ext.ymax);
    svg.linePx(x, y0, x, y1, "#eee");
    const label = logX ? `1e${Math.round(t)}` : t.toPrecision(3);
    svg.textPx(x, y0 + 14, label, 9, "middle");
  }

  svg.polyline(xs.map((x, i) => [x, totals[i]] as [number, number]),
               "#1f77b4", 2);
  svg.polyline(xs.map((x, i) => [x, pens[i]] as [number, number]),
               "#d62728", 2, "6,3");
  xs.forEach((x, i) => {
    svg.circle(x, totals[i], 3, "#1f77b4");
    svg.circle(x, pens[i], 3, "#d62728");
  });
  svg.textPx(50, 18, `total energy vs ${table.parameter}`, 12);
  svg.textPx(50, 32, "dashed: scaled self-contact penalty", 10);
  return svg.render();
}
