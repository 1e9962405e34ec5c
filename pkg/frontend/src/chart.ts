/**
 * Minimal interpreter for the engine's declarative chart specs.
 *
 * The backend emits Vega-Lite flavored specs with inline data. This renders
 * the subset the engine produces (bar, line, point/scatter, arc) as plain SVG
 * so the UI has zero chart dependencies, and exposes per-datum hit targets
 * that the visualization canvas wires to hover/click interaction events.
 */

import type { GrammarSpec } from "./api";

export interface ChartGeometry {
  kind: "bar" | "line" | "point" | "arc";
  xField: string;
  yField: string;
  width: number;
  height: number;
  /** One hit target per datum, in data order. */
  targets: { shape: string; attrs: Record<string, string | number>; datum: Record<string, unknown> }[];
  /** Extra non-interactive elements (the line path, axes labels). */
  decor: { shape: string; attrs: Record<string, string | number>; text?: string }[];
}

export function markType(spec: GrammarSpec): string {
  return typeof spec.mark === "string" ? spec.mark : spec.mark.type;
}

function fieldFor(
  spec: GrammarSpec,
  channel: string,
  fallback: string,
): string {
  return spec.encoding?.[channel]?.field ?? fallback;
}

function numericValues(
  rows: Record<string, unknown>[],
  field: string,
): number[] {
  return rows.map((r) => Number(r[field] ?? 0));
}

const W = 420;
const H = 240;
const PAD = 36;

export function layoutChart(spec: GrammarSpec): ChartGeometry {
  const mark = markType(spec);
  const rows = spec.data.values;
  const channels = Object.keys(spec.encoding ?? {});
  const xField = fieldFor(spec, mark === "arc" ? "color" : "x", channels[0] ?? "x");
  const yField = fieldFor(spec, mark === "arc" ? "theta" : "y", channels[1] ?? "y");

  if (mark === "arc") {
    return layoutArc(rows, xField, yField);
  }

  const ys = numericValues(rows, yField);
  const maxY = Math.max(...ys, 0) || 1;
  const minY = Math.min(...ys, 0);
  const span = maxY - minY || 1;
  const innerW = W - 2 * PAD;
  const innerH = H - 2 * PAD;
  const step = rows.length > 0 ? innerW / rows.length : innerW;
  const yPos = (v: number) => PAD + innerH - ((v - minY) / span) * innerH;

  const geometry: ChartGeometry = {
    kind: mark === "bar" ? "bar" : mark === "line" ? "line" : "point",
    xField,
    yField,
    width: W,
    height: H,
    targets: [],
    decor: [
      { shape: "line", attrs: { x1: PAD, y1: H - PAD, x2: W - PAD, y2: H - PAD, stroke: "#444" } },
      { shape: "line", attrs: { x1: PAD, y1: PAD, x2: PAD, y2: H - PAD, stroke: "#444" } },
    ],
  };

  rows.forEach((datum, i) => {
    const cx = PAD + step * i + step / 2;
    const v = Number(datum[yField] ?? 0);
    if (mark === "bar") {
      const top = yPos(Math.max(v, 0));
      const bottom = yPos(Math.min(v, 0));
      geometry.targets.push({
        shape: "rect",
        attrs: {
          x: cx - step * 0.35,
          y: top,
          width: step * 0.7,
          height: Math.max(bottom - top, 1),
          fill: "#4c78a8",
        },
        datum,
      });
    } else {
      geometry.targets.push({
        shape: "circle",
        attrs: { cx, cy: yPos(v), r: 4, fill: "#4c78a8" },
        datum,
      });
    }
    geometry.decor.push({
      shape: "text",
      attrs: { x: cx, y: H - PAD + 14, "font-size": 9, "text-anchor": "middle", fill: "#666" },
      text: String(datum[xField] ?? ""),
    });
  });

  if (mark === "line" && rows.length > 1) {
    const path = rows
      .map((datum, i) => {
        const cx = PAD + step * i + step / 2;
        return `${i === 0 ? "M" : "L"}${cx},${yPos(Number(datum[yField] ?? 0))}`;
      })
      .join(" ");
    geometry.decor.push({
      shape: "path",
      attrs: { d: path, stroke: "#4c78a8", fill: "none", "stroke-width": 2 },
    });
  }
  return geometry;
}

function layoutArc(
  rows: Record<string, unknown>[],
  labelField: string,
  valueField: string,
): ChartGeometry {
  const values = numericValues(rows, valueField);
  const total = values.reduce((a, b) => a + b, 0) || 1;
  const cx = W / 2;
  const cy = H / 2;
  const r = Math.min(W, H) / 2 - 10;
  let angle = -Math.PI / 2;
  const geometry: ChartGeometry = {
    kind: "arc",
    xField: labelField,
    yField: valueField,
    width: W,
    height: H,
    targets: [],
    decor: [],
  };
  const palette = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#b279a2"];
  rows.forEach((datum, i) => {
    const frac = values[i] / total;
    const next = angle + frac * 2 * Math.PI;
    const large = frac > 0.5 ? 1 : 0;
    const x0 = cx + r * Math.cos(angle);
    const y0 = cy + r * Math.sin(angle);
    const x1 = cx + r * Math.cos(next);
    const y1 = cy + r * Math.sin(next);
    geometry.targets.push({
      shape: "path",
      attrs: {
        d: `M${cx},${cy} L${x0},${y0} A${r},${r} 0 ${large} 1 ${x1},${y1} Z`,
        fill: palette[i % palette.length],
      },
      datum,
    });
    angle = next;
  });
  return geometry;
}

/** Render geometry into an SVG element string (used by tests and the canvas). */
export function geometryToSvg(geometry: ChartGeometry): string {
  const attr = (attrs: Record<string, string | number>) =>
    Object.entries(attrs)
      .map(([k, v]) => `${k}="${v}"`)
      .join(" ");
  const parts = [
    `<svg viewBox="0 0 ${geometry.width} ${geometry.height}" xmlns="http://www.w3.org/2000/svg">`,
  ];
  for (const d of geometry.decor) {
    parts.push(
      d.text !== undefined
        ? `<${d.shape} ${attr(d.attrs)}>${d.text}</${d.shape}>`
        : `<${d.shape} ${attr(d.attrs)} />`,
    );
  }
  geometry.targets.forEach((t, i) => {
    parts.push(`<${t.shape} ${attr(t.attrs)} data-index="${i}" class="hit" />`);
  });
  parts.push("</svg>");
  return parts.join("");
}
