/** Minimal PNG output: rasterizes panel frames and curve polylines onto an
 * RGB buffer and encodes it with node's zlib (no text rendering). */

import { deflateSync } from "zlib";
import { Curve, PanelSpec } from "./bundle.js";
import { DEFAULT_LAYOUT } from "./svg.js";

class Raster {
  data: Uint8Array;
  constructor(public width: number, public height: number) {
    this.data = new Uint8Array(width * height * 3).fill(255);
  }

  set(x: number, y: number, rgb: [number, number, number]) {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return;
    const o = (yi * this.width + xi) * 3;
    this.data[o] = rgb[0];
    this.data[o + 1] = rgb[1];
    this.data[o + 2] = rgb[2];
  }

  line(x0: number, y0: number, x1: number, y1: number, rgb: [number, number, number]) {
    const steps = Math.max(Math.abs(x1 - x0), Math.abs(y1 - y0), 1) * 2;
    for (let i = 0; i <= steps; i++) {
      const f = i / steps;
      this.set(x0 + f * (x1 - x0), y0 + f * (y1 - y0), rgb);
    }
  }
}

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(buf: Uint8Array): number {
  let c = 0xffffffff;
  for (const b of buf) c = CRC_TABLE[(c ^ b) & 0xff] ^ (c >>> 8);
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + data.length);
  const dv = new DataView(out.buffer);
  dv.setUint32(0, data.length);
  for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
  out.set(data, 8);
  dv.setUint32(8 + data.length, crc32(out.subarray(4, 8 + data.length)));
  return out;
}

export function encodePng(r: Raster): Buffer {
  const { width, height, data } = r;
  const raw = new Uint8Array(height * (1 + width * 3));
  for (let y = 0; y < height; y++) {
    raw[y * (1 + width * 3)] = 0; // no filter
    raw.set(data.subarray(y * width * 3, (y + 1) * width * 3), y * (1 + width * 3) + 1);
  }
  const ihdr = new Uint8Array(13);
  const dv = new DataView(ihdr.buffer);
  dv.setUint32(0, width);
  dv.setUint32(4, height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // RGB
  const sig = Uint8Array.from([137, 80, 78, 71, 13, 10, 26, 10]);
  const idat = deflateSync(raw);
  return Buffer.concat([
    sig,
    chunk("IHDR", ihdr),
    chunk("IDAT", new Uint8Array(idat)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}

const COLORS: [number, number, number][] = [
  [31, 119, 180],
  [214, 39, 40],
  [44, 160, 44],
  [148, 103, 189],
  [255, 127, 14],
];

export function rasterizeFigure(panels: { panel: PanelSpec; curves: Curve[] }[]): Buffer {
  const layout = DEFAULT_LAYOUT;
  const width = layout.width * panels.length;
  const img = new Raster(width, layout.height);
  panels.forEach(({ panel, curves }, pi) => {
    const offset = pi * layout.width;
    const { margin } = layout;
    const plotW = layout.width - margin.left - margin.right;
    const plotH = layout.height - margin.top - margin.bottom;
    const black: [number, number, number] = [40, 40, 40];
    img.line(offset + margin.left, margin.top, offset + margin.left + plotW, margin.top, black);
    img.line(offset + margin.left, margin.top + plotH, offset + margin.left + plotW, margin.top + plotH, black);
    img.line(offset + margin.left, margin.top, offset + margin.left, margin.top + plotH, black);
    img.line(offset + margin.left + plotW, margin.top, offset + margin.left + plotW, margin.top + plotH, black);
    const xLog = panel.x.axis === "log";
    const yLog = panel.y.axis === "log";
    const pts = curves.flatMap((c) =>
      c.x
        .map((x, i) => [x, c.y[i]] as [number, number])
        .filter(([x, y]) => isFinite(x) && isFinite(y) && (!xLog || x > 0) && (!yLog || y > 0))
    );
    if (pts.length === 0) throw new Error("no drawable points in panel");
    const xs = pts.map((p) => (xLog ? Math.log10(p[0]) : p[0]));
    const ys = pts.map((p) => (yLog ? Math.log10(p[1]) : p[1]));
    const xd: [number, number] = [Math.min(...xs), Math.max(...xs)];
    const yd: [number, number] = [Math.min(...ys), Math.max(...ys)];
    const sx = (v: number) => {
      const t = xLog ? Math.log10(v) : v;
      return offset + margin.left + ((t - xd[0]) / (xd[1] - xd[0] || 1)) * plotW;
    };
    const sy = (v: number) => {
      const t = yLog ? Math.log10(v) : v;
      return margin.top + plotH - ((t - yd[0]) / (yd[1] - yd[0] || 1)) * plotH;
    };
    curves.forEach((c, ci) => {
      const color = COLORS[ci % COLORS.length];
      let prev: [number, number] | null = null;
      for (let i = 0; i < c.x.length; i++) {
        const x = c.x[i];
        const y = c.y[i];
        if (!isFinite(x) || !isFinite(y) || (xLog && x <= 0) || (yLog && y <= 0)) {
          prev = null;
          continue;
        }
        const p: [number, number] = [sx(x), sy(y)];
        if (prev) img.line(prev[0], prev[1], p[0], p[1], color);
        prev = p;
      }
    });
  });
  return encodePng(img);
}
