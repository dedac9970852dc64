import { writeFileSync } from "fs";
import { Curve, FigureBundle, loadBundle, loadCurve, PanelSpec } from "./bundle.js";
import { rasterizeFigure } from "./raster.js";
import { DEFAULT_LAYOUT, renderPanelSvg } from "./svg.js";

export interface RenderOptions {
  format?: "svg" | "png";
  out?: string;
}

interface LoadedPanel {
  panel: PanelSpec;
  curves: Curve[];
}

function loadPanels(dir: string, bundle: FigureBundle): LoadedPanel[] {
  const panels: LoadedPanel[] = [];
  for (const panel of bundle.panels) {
    if (!panel.curves || panel.curves.length === 0) {
      throw new Error(`panel '${panel.name}' has an empty curve list`);
    }
    panels.push({
      panel,
      curves: panel.curves.map((spec) => loadCurve(dir, spec)),
    });
  }
  return panels;
}

export function renderSvgString(dir: string): string {
  const bundle = loadBundle(dir);
  const panels = loadPanels(dir, bundle);
  const layout = DEFAULT_LAYOUT;
  const width = layout.width * panels.length;
  const body = panels
    .map(({ panel, curves }, i) => renderPanelSvg(curves, panel, layout, i * layout.width))
    .join("\n");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${layout.height}" ` +
    `viewBox="0 0 ${width} ${layout.height}" font-family="sans-serif">\n` +
    `<title>${bundle.figure}</title>\n<rect width="100%" height="100%" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

/** Render a bundle directory to one image file; returns the output path. */
export function render(dir: string, opts: RenderOptions = {}): string {
  const bundle = loadBundle(dir);
  const format = opts.format ?? "svg";
  const out = opts.out ?? `${dir}/${bundle.figure}.${format}`;
  if (format === "svg") {
    writeFileSync(out, renderSvgString(dir));
  } else if (format === "png") {
    const panels = loadPanels(dir, bundle);
    writeFileSync(out, rasterizeFigure(panels));
  } else {
    throw new Error(`unsupported format '${format}'`);
  }
  return out;
}
