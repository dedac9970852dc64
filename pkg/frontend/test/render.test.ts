import { mkdtempSync, writeFileSync, existsSync, readFileSync, mkdirSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { collapseSpread, loadBundle, loadCurve, MissingColumnError } from "../src/bundle.js";
import { render, renderSvgString } from "../src/render.js";

const FIG3A = join(__dirname, "..", "testdata", "fig3a");

describe("fig3a bundle (generated by the simulation CLI)", () => {
  it("renders to SVG with every curve present", () => {
    const out = join(mkdtempSync(join(tmpdir(), "ffplots-")), "fig3a.svg");
    const path = render(FIG3A, { out });
    expect(existsSync(path)).toBe(true);
    const svg = readFileSync(path, "utf8");
    const bundle = loadBundle(FIG3A);
    const nCurves = bundle.panels.reduce((a, p) => a + p.curves.length, 0);
    const polylines = svg.match(/<polyline /g) ?? [];
    expect(polylines.length).toBeGreaterThanOrEqual(nCurves);
    for (const panel of bundle.panels) {
      for (const curve of panel.curves) {
        expect(svg).toContain(curve.label);
      }
    }
  });

  it("renders to PNG via the built-in rasterizer", () => {
    const out = join(mkdtempSync(join(tmpdir(), "ffplots-")), "fig3a.png");
    render(FIG3A, { out, format: "png" });
    const buf = readFileSync(out);
    expect(buf.subarray(1, 4).toString()).toBe("PNG");
    expect(buf.length).toBeGreaterThan(1000);
  });

  it("is deterministic: re-rendering yields identical bytes", () => {
    const a = renderSvgString(FIG3A);
    const b = renderSvgString(FIG3A);
    expect(a).toBe(b);
  });

  it("collapse curves overlay: max pointwise spread < 25% in the window", () => {
    const bundle = loadBundle(FIG3A);
    const panel = bundle.panels.find((p) => p.name === "energy_collapse")!;
    const curves = panel.curves.map((c) => loadCurve(FIG3A, c));
    const spread = collapseSpread(curves, [1.0, 3.0]);
    expect(spread).toBeLessThan(0.25);
  });
});

describe("error contracts", () => {
  it("raises a missing-column error naming the column", () => {
    const dir = mkdtempSync(join(tmpdir(), "ffplots-"));
    writeFileSync(join(dir, "c.csv"), "t,mean_energy\n1,0.5\n2,0.3\n");
    expect(() =>
      loadCurve(dir, {
        csv: "c.csv",
        label: "x",
        x_column: "t",
        y_column: "nope",
        x_mult: 1,
        y_mult: 1,
      })
    ).toThrowError(MissingColumnError);
    try {
      loadCurve(dir, {
        csv: "c.csv",
        label: "x",
        x_column: "t",
        y_column: "nope",
        x_mult: 1,
        y_mult: 1,
      });
    } catch (err) {
      expect((err as Error).message).toContain("nope");
    }
  });

  it("refuses to render an empty curve list and writes no file", () => {
    const dir = mkdtempSync(join(tmpdir(), "ffplots-"));
    writeFileSync(
      join(dir, "figure.json"),
      JSON.stringify({
        figure: "empty",
        version: "0",
        panels: [
          {
            name: "p",
            x: { label: "x", axis: "linear" },
            y: { label: "y", axis: "linear" },
            curves: [],
            reference_lines: [],
          },
        ],
        meta: {},
      })
    );
    const out = join(dir, "empty.svg");
    expect(() => render(dir, { out })).toThrowError(/empty curve list/);
    expect(existsSync(out)).toBe(false);
  });
});
