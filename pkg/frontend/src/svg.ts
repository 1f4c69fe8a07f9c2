/** Minimal SVG document builder with a y-up world coordinate system. */

export interface Extent {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

export class SvgCanvas {
  readonly width: number;
  readonly height: number;
  private parts: string[] = [];
  private readonly sx: number;
  private readonly sy: number;
  private readonly ox: number;
  private readonly oy: number;

  constructor(extent: Extent, widthPx = 720, marginPx = 40) {
    const w = extent.xmax - extent.xmin;
    const h = extent.ymax - extent.ymin;
    if (!(w > 0) || !(h > 0)) {
      throw new Error("degenerate drawing extent");
    }
    const scale = (widthPx - 2 * marginPx) / w;
    this.width = widthPx;
    this.height = Math.ceil(h * scale + 2 * marginPx);
    this.sx = scale;
    this.sy = -scale; // flip: world y up, SVG y down
    this.ox = marginPx - extent.xmin * scale;
    this.oy = this.height - marginPx + extent.ymin * scale;
  }

  px(x: number, y: number): [number, number] {
    return [this.ox + this.sx * x, this.oy + this.sy * y];
  }

  add(fragment: string): void {
    this.parts.push(fragment);
  }

  polygon(points: [number, number][], fill: string, stroke = "none",
          strokeWidth = 0.5, attrs = ""): void {
    const pts = points
      .map(([x, y]) => this.px(x, y).map((v) => v.toFixed(2)).join(","))
      .join(" ");
    this.add(`<polygon points="${pts}" fill="${fill}" stroke="${stroke}" ` +
             `stroke-width="${strokeWidth}"${attrs ? " " + attrs : ""}/>`);
  }

  polyline(points: [number, number][], stroke: string, width = 1.5,
           dash = ""): void {
    const pts = points
      .map(([x, y]) => this.px(x, y).map((v) => v.toFixed(2)).join(","))
      .join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.add(`<polyline points="${pts}" fill="none" stroke="${stroke}" ` +
             `stroke-width="${width}"${d}/>`);
  }

  circle(x: number, y: number, r: number, fill: string): void {
    const [cx, cy] = this.px(x, y);
    this.add(`<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="${r}" ` +
             `fill="${fill}"/>`);
  }

  text(x: number, y: number, s: string, size = 12, anchor = "start"): void {
    const [cx, cy] = this.px(x, y);
    this.textPx(cx, cy, s, size, anchor);
  }

  textPx(cx: number, cy: number, s: string, size = 12, anchor = "start"): void {
    this.add(`<text x="${cx.toFixed(2)}" y="${cy.toFixed(2)}" ` +
             `font-size="${size}" font-family="sans-serif" ` +
             `text-anchor="${anchor}">${escapeXml(s)}</text>`);
  }

  rectPx(x: number, y: number, w: number, h: number, fill: string,
         stroke = "none"): void {
    this.add(`<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" ` +
             `width="${w.toFixed(2)}" height="${h.toFixed(2)}" ` +
             `fill="${fill}" stroke="${stroke}"/>`);
  }

  linePx(x1: number, y1: number, x2: number, y2: number, stroke: string,
         width = 1): void {
    this.add(`<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" ` +
             `x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" ` +
             `stroke="${stroke}" stroke-width="${width}"/>`);
  }

  render(): string {
    return `<?xml version="1.0" encoding="UTF-8"?>\n` +
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") + "\n</svg>\n";
  }
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
