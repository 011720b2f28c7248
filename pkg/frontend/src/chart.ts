// SVG rendering of the sorted-latency chart. String-built so it is testable
// without a DOM; mirrors the server-side figure export (sorted curve, dashed
// baseline marker, shaded trailing segment for incomplete runs).

import type { ChartModel } from "./model.js";

const WIDTH = 760;
const HEIGHT = 360;
const MARGIN = 46;

export function renderChartSvg(model: ChartModel): string {
  const plotW = WIDTH - 2 * MARGIN;
  const plotH = HEIGHT - 2 * MARGIN;
  let { yMin, yMax } = model;
  if (yMax === yMin) {
    yMax = yMin + 1;
  }
  const pad = 0.1 * (yMax - yMin);
  yMin -= pad;
  yMax += pad;
  const total = model.points.length + model.incompleteCount;
  const n = Math.max(total, 1);

  const xAt = (i: number) => MARGIN + (plotW * i) / Math.max(n - 1, 1);
  const yAt = (v: number) => MARGIN + plotH * (1 - (v - yMin) / (yMax - yMin));

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" class="latency-chart">`,
  ];

  if (model.incompleteCount > 0) {
    const x0 = xAt(model.points.length);
    parts.push(
      `<rect class="incomplete-segment" x="${x0.toFixed(2)}" y="${MARGIN}" ` +
        `width="${(MARGIN + plotW - x0).toFixed(2)}" height="${plotH}" ` +
        `data-incomplete-count="${model.incompleteCount}"/>`,
    );
  }

  if (model.points.length > 0) {
    const coords = model.points
      .map((p, i) => `${xAt(i).toFixed(2)},${yAt(p.mean).toFixed(2)}`)
      .join(" ");
    parts.push(`<polyline class="series" points="${coords}" fill="none"/>`);
  }

  if (model.baselineMean !== null) {
    const y = yAt(model.baselineMean).toFixed(2);
    parts.push(
      `<line class="baseline-marker" x1="${MARGIN}" y1="${y}" ` +
        `x2="${MARGIN + plotW}" y2="${y}" data-baseline-mean="${model.baselineMean}"/>`,
      `<text class="baseline-label" x="${MARGIN + 4}" y="${(Number(y) - 6).toFixed(2)}">` +
        `baseline ${model.baselineMean.toFixed(4)} s</text>`,
    );
  }

  parts.push(
    `<line class="axis" x1="${MARGIN}" y1="${MARGIN + plotH}" x2="${MARGIN + plotW}" y2="${MARGIN + plotH}"/>`,
    `<line class="axis" x1="${MARGIN}" y1="${MARGIN}" x2="${MARGIN}" y2="${MARGIN + plotH}"/>`,
    `<text class="axis-label" x="${MARGIN}" y="${HEIGHT - 10}">configurations, sorted by mean latency</text>`,
    "</svg>",
  );
  return parts.join("\n");
}
