/**
 * Deterministic SVG assembly: fixed canvas, fixed fonts, no timestamps.
 *
 * All numbers are formatted through fmt() so identical inputs always produce
 * byte-identical documents.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 72, right: 24, top: 28, bottom: 52 };

export function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  if (v === 0) return "0";
  const out = v.toPrecision(8);
  return out.includes(".") || out.includes("e")
    ? out.replace(/\.?0+($|e)/, "$1")
    : out;
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

/** round-ish tick positions: 5 evenly spaced ticks across the domain */
export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  const out: number[] = [];
  for (let i = 0; i < count; i++) out.push(lo + ((hi - lo) * i) / (count - 1));
  return out;
}

export function polyline(xs: number[], ys: number[], stroke: string, width = 1.5): string {
  const pts = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}" points="${pts}"/>`;
}

export interface AxisSpec {
  xLabel: string;
  yLabel: string;
  title: string;
}

export function axes(
  xScale: Scale,
  yScale: Scale,
  spec: AxisSpec,
  xTickFmt: (v: number) => string = fmt,
  yTickFmt: (v: number) => string = fmt,
): string {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const parts: string[] = [];
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const t of ticks(xScale.domain)) {
    const px = xScale(t);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 20}" text-anchor="middle" font-size="12">${xTickFmt(t)}</text>`,
    );
  }
  for (const t of ticks(yScale.domain)) {
    const py = yScale(t);
    parts.push(`<line x1="${x0 - 5}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${fmt(py + 4)}" text-anchor="end" font-size="12">${yTickFmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-size="14">${spec.xLabel}</text>`,
  );
  parts.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="14" transform="rotate(-90 18 ${(y0 + y1) / 2})">${spec.yLabel}</text>`,
  );
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${y1 - 8}" text-anchor="middle" font-size="15">${spec.title}</text>`,
  );
  return parts.join("\n");
}

export function document(body: string, dpi = 96): string {
  const wIn = (WIDTH * dpi) / 96;
  const hIn = (HEIGHT * dpi) / 96;
  return [
    `<?xml version="1.0" encoding="UTF-8"?>`,
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fmt(wIn)}" height="${fmt(hIn)}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    body,
    `</svg>`,
    ``,
  ].join("\n");
}

export function plotArea(): { x: [number, number]; y: [number, number] } {
  return {
    x: [MARGIN.left, WIDTH - MARGIN.right],
    y: [HEIGHT - MARGIN.bottom, MARGIN.top],
  };
}
