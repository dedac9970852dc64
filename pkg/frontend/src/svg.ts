import { Curve, PanelSpec, ReferenceLine } from "./bundle.js";

export interface PanelLayout {
  width: number;
  height: number;
  margin: { left: number; right: number; top: number; bottom: number };
}

export const DEFAULT_LAYOUT: PanelLayout = {
  width: 420,
  height: 340,
  margin: { left: 64, right: 16, top: 34, bottom: 48 },
};

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

type Scale = (v: number) => number;

function makeScale(domain: [number, number], range: [number, number], log: boolean): Scale {
  if (log) {
    const l0 = Math.log10(domain[0]);
    const l1 = Math.log10(domain[1]);
    return (v) => range[0] + ((Math.log10(v) - l0) / (l1 - l0 || 1)) * (range[1] - range[0]);
  }
  return (v) => range[0] + ((v - domain[0]) / (domain[1] - domain[0] || 1)) * (range[1] - range[0]);
}

function niceTicks(domain: [number, number], log: boolean): number[] {
  if (log) {
    const ticks: number[] = [];
    const lo = Math.floor(Math.log10(domain[0]));
    const hi = Math.ceil(Math.log10(domain[1]));
    for (let e = lo; e <= hi; e++) {
      const v = 10 ** e;
      if (v >= domain[0] / 1.001 && v <= domain[1] * 1.001) ticks.push(v);
    }
    return ticks.length >= 2 ? ticks : [domain[0], domain[1]];
  }
  const span = domain[1] - domain[0];
  const step = 10 ** Math.floor(Math.log10(span / 4 || 1));
  const mult = span / step > 8 ? 2 : 1;
  const ticks: number[] = [];
  const s = step * mult;
  for (let v = Math.ceil(domain[0] / s) * s; v <= domain[1] + 1e-12; v += s) ticks.push(v);
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Math.round(v * 1000) / 1000);
  return v.toExponential(0).replace("+", "");
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

interface Domains {
  x: [number, number];
  y: [number, number];
}

function panelDomains(panel: PanelSpec, curves: Curve[]): Domains {
  const xs: number[] = [];
  const ys: number[] = [];
  const xLog = panel.x.axis === "log";
  const yLog = panel.y.axis === "log";
  for (const c of curves) {
    for (let i = 0; i < c.x.length; i++) {
      const x = c.x[i];
      const y = c.y[i];
      if (!isFinite(x) || !isFinite(y)) continue;
      if (xLog && x <= 0) continue;
      if (yLog && y <= 0) continue;
      xs.push(x);
      ys.push(y);
    }
  }
  if (xs.length === 0) throw new Error("no drawable points in panel");
  const pad = (lo: number, hi: number, log: boolean): [number, number] =>
    log ? [lo / 1.3, hi * 1.3] : [lo - 0.04 * (hi - lo || 1), hi + 0.04 * (hi - lo || 1)];
  let yLo = Math.min(...ys);
  const yHi = Math.max(...ys);
  if (yLog) yLo = Math.max(yLo, yHi * 1e-8); // clamp the log floor for readability
  return { x: pad(Math.min(...xs), Math.max(...xs), xLog), y: pad(yLo, yHi, yLog) };
}

function polyline(
  c: Curve,
  sx: Scale,
  sy: Scale,
  panel: PanelSpec,
  color: string,
  dashed = false
): string {
  const pts: string[] = [];
  for (let i = 0; i < c.x.length; i++) {
    const x = c.x[i];
    const y = c.y[i];
    if (!isFinite(x) || !isFinite(y)) continue;
    if (panel.x.axis === "log" && x <= 0) continue;
    if (panel.y.axis === "log" && y <= 0) continue;
    pts.push(`${sx(x).toFixed(2)},${sy(y).toFixed(2)}`);
  }
  const dash = dashed ? ' stroke-dasharray="6,4"' : "";
  return `<polyline fill="none" stroke="${color}" stroke-width="1.6"${dash} points="${pts.join(" ")}"/>`;
}

function referenceCurve(ref: ReferenceLine, domain: [number, number], log: boolean): Curve {
  const n = 80;
  const xs: number[] = [];
  for (let i = 0; i < n; i++) {
    const f = i / (n - 1);
    xs.push(
      log
        ? domain[0] * Math.pow(domain[1] / domain[0], f)
        : domain[0] + f * (domain[1] - domain[0])
    );
  }
  const ys = xs.map((x) =>
    ref.kind === "exp"
      ? ref.amplitude * Math.exp(-(ref.rate ?? 0) * x)
      : ref.amplitude * Math.pow(x, ref.exponent ?? 0)
  );
  return { label: ref.label, x: xs, y: ys };
}

export function renderPanelSvg(
  dirCurves: Curve[],
  panel: PanelSpec,
  layout: PanelLayout = DEFAULT_LAYOUT,
  offsetX = 0
): string {
  const { width, height, margin } = layout;
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const dom = panelDomains(panel, dirCurves);
  const sx0 = makeScale(dom.x, [0, plotW], panel.x.axis === "log");
  const sy0 = makeScale(dom.y, [plotH, 0], panel.y.axis === "log");
  const sx: Scale = (v) => offsetX + margin.left + sx0(v);
  const sy: Scale = (v) => margin.top + sy0(v);
  const parts: string[] = [];
  const x0 = offsetX + margin.left;
  const y0 = margin.top;
  parts.push(
    `<rect x="${x0}" y="${y0}" width="${plotW}" height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`
  );
  for (const t of niceTicks(dom.x, panel.x.axis === "log")) {
    const px = sx(t);
    parts.push(`<line x1="${px.toFixed(1)}" y1="${y0 + plotH}" x2="${px.toFixed(1)}" y2="${y0 + plotH + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${px.toFixed(1)}" y="${y0 + plotH + 18}" font-size="10" text-anchor="middle">${fmt(t)}</text>`
    );
  }
  for (const t of niceTicks(dom.y, panel.y.axis === "log")) {
    const py = sy(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(1)}" x2="${x0}" y2="${py.toFixed(1)}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${(py + 3).toFixed(1)}" font-size="10" text-anchor="end">${fmt(t)}</text>`
    );
  }
  parts.push(
    `<text x="${x0 + plotW / 2}" y="${height - 10}" font-size="12" text-anchor="middle">${esc(panel.x.label)}</text>`
  );
  parts.push(
    `<text x="${offsetX + 16}" y="${y0 + plotH / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 ${offsetX + 16} ${y0 + plotH / 2})">${esc(panel.y.label)}</text>`
  );
  parts.push(
    `<text x="${x0 + plotW / 2}" y="${y0 - 12}" font-size="12" font-weight="bold" text-anchor="middle">${esc(panel.name)}</text>`
  );
  dirCurves.forEach((c, i) => {
    const color = COLORS[i % COLORS.length];
    parts.push(polyline(c, sx, sy, panel, color));
    parts.push(
      `<text x="${x0 + plotW - 6}" y="${y0 + 14 + 13 * i}" font-size="10" text-anchor="end" fill="${color}">${esc(c.label)}</text>`
    );
  });
  panel.reference_lines.forEach((ref) => {
    parts.push(polyline(referenceCurve(ref, dom.x, panel.x.axis === "log"), sx, sy, panel, "#555", true));
  });
  return parts.join("\n");
}
