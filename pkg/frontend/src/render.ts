/**
 * Server-side SVG rendering: no DOM, no browser, just file in / file out.
 * The figure never recomputes statistics; it is a pure view over the
 * simulator's result files.
 */

import { writeFileSync } from "fs";
import * as echarts from "echarts";
import { FigureSpec, buildOption } from "./figures.js";

export function renderToSvgString(spec: FigureSpec): string {
  const option = buildOption(spec);
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: spec.width ?? 820,
    height: spec.height ?? 560,
  });
  try {
    chart.setOption(option);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}

/** Render a figure spec and write the SVG to its output path. */
export function render(spec: FigureSpec): string {
  const svg = renderToSvgString(spec);
  writeFileSync(spec.output, svg, "utf-8");
  return spec.output;
}
