import { readFileSync } from "fs";
import { join } from "path";

export interface AxisSpec {
  label: string;
  axis: "linear" | "log";
}

export interface CurveSpec {
  csv: string;
  label: string;
  x_column: string;
  y_column: string;
  x_mult: number;
  y_mult: number;
  meta?: Record<string, unknown>;
}

export interface ReferenceLine {
  kind: "exp" | "power";
  amplitude: number;
  rate?: number;
  exponent?: number;
  label: string;
}

export interface PanelSpec {
  name: string;
  x: AxisSpec;
  y: AxisSpec;
  curves: CurveSpec[];
  reference_lines: ReferenceLine[];
}

export interface FigureBundle {
  figure: string;
  version: string;
  panels: PanelSpec[];
  meta: Record<string, unknown>;
}

export interface Curve {
  label: string;
  x: number[];
  y: number[];
}

export class MissingColumnError extends Error {
  constructor(column: string, csv: string) {
    super(`column '${column}' not found in ${csv}`);
    this.name = "MissingColumnError";
  }
}

export function loadBundle(dir: string): FigureBundle {
  const raw = readFileSync(join(dir, "figure.json"), "utf8");
  const bundle = JSON.parse(raw) as FigureBundle;
  if (!Array.isArray(bundle.panels)) {
    throw new Error(`${dir}/figure.json: missing panels array`);
  }
  return bundle;
}

export function parseCsv(path: string): Map<string, number[]> {
  const text = readFileSync(path, "utf8").trim();
  const lines = text.split("\n");
  const header = lines[0].split(",");
  const columns = new Map<string, number[]>(header.map((h) => [h, []]));
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    for (let j = 0; j < header.length; j++) {
      columns.get(header[j])!.push(Number(cells[j]));
    }
  }
  return columns;
}

/** Load one curve of a panel, applying the bundle's numeric transforms. */
export function loadCurve(dir: string, spec: CurveSpec): Curve {
  const columns = parseCsv(join(dir, spec.csv));
  const xs = columns.get(spec.x_column);
  if (!xs) throw new MissingColumnError(spec.x_column, spec.csv);
  const ys = columns.get(spec.y_column);
  if (!ys) throw new MissingColumnError(spec.y_column, spec.csv);
  return {
    label: spec.label,
    x: xs.map((v) => v * spec.x_mult),
    y: ys.map((v) => v * spec.y_mult),
  };
}

/**
 * Max pointwise relative spread of a panel's transformed curves over a
 * window in x: max over the grid of (max - min) / mean.  Used by the
 * scripted overlay check of the collapse panels.
 */
export function collapseSpread(
  curves: Curve[],
  window: [number, number],
  nGrid = 40
): number {
  const positive = curves.map((c) => {
    const pts = c.x
      .map((x, i) => [x, c.y[i]] as [number, number])
      .filter(([, y]) => y > 0);
    return pts;
  });
  const lo = Math.max(window[0], ...positive.map((p) => p[0][0]));
  const hi = Math.min(window[1], ...positive.map((p) => p[p.length - 1][0]));
  if (!(hi > lo)) throw new Error("curves share no overlap window");
  let spread = 0;
  for (let g = 0; g < nGrid; g++) {
    const x = lo + ((hi - lo) * g) / (nGrid - 1);
    const vals = positive.map((pts) => interp(pts, x));
    const mx = Math.max(...vals);
    const mn = Math.min(...vals);
    const mean = vals.reduce((a, b) => a + b, 0) / vals.length;
    spread = Math.max(spread, (mx - mn) / mean);
  }
  return spread;
}

function interp(pts: [number, number][], x: number): number {
  if (x <= pts[0][0]) return pts[0][1];
  for (let i = 1; i < pts.length; i++) {
    if (pts[i][0] >= x) {
      const [x0, y0] = pts[i - 1];
      const [x1, y1] = pts[i];
      if (x1 === x0) return y1;
      return y0 + ((y1 - y0) * (x - x0)) / (x1 - x0);
    }
  }
  return pts[pts.length - 1][1];
}
