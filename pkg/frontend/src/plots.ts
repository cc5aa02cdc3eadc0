/**
 * One render function per plot kind. Each takes parsed artifact data and
 * returns a complete SVG document string.
 */

import { viridis } from "./colormap.js";
import type { FitParams, MatrixCsv, ModeRow, TwoColumn } from "./csv.js";
import { SchemaError } from "./csv.js";
import { centerCrossSection, type ModeProfile } from "./modebin.js";
import {
  axes,
  document,
  extent,
  fmt,
  linearScale,
  plotArea,
  polyline,
  MARGIN,
  WIDTH,
  HEIGHT,
} from "./svg.js";

/** Rabi chevron map: rows are detunings (Hz), columns are times (s). */
export function renderHeatmap(map: MatrixCsv, dpi = 96): string {
  const area = plotArea();
  const times = map.columnAxis.map((t) => t * 1e6);
  const detunings = map.rowAxis.map((d) => d / 1e6);
  const xs = linearScale(extent(times), area.x);
  const ys = linearScale(extent(detunings), area.y);
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of map.values) {
    for (const v of row) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  const span = hi - lo || 1;
  const cellW = (area.x[1] - area.x[0]) / map.columnAxis.length;
  const cellH = (area.y[0] - area.y[1]) / map.rowAxis.length;
  const cells: string[] = [];
  for (let i = 0; i < map.rowAxis.length; i++) {
    for (let j = 0; j < map.columnAxis.length; j++) {
      const color = viridis((map.values[i][j] - lo) / span);
      const px = area.x[0] + j * cellW;
      const py = area.y[0] - (i + 1) * cellH;
      cells.push(
        `<rect x="${fmt(px)}" y="${fmt(py)}" width="${fmt(cellW + 0.5)}" height="${fmt(cellH + 0.5)}" fill="${color}"/>`,
      );
    }
  }
  const body =
    cells.join("\n") +
    "\n" +
    axes(xs, ys, {
      xLabel: "interaction time (us)",
      yLabel: "qubit detuning (MHz)",
      title: "vacuum Rabi oscillations",
    });
  return document(body, dpi);
}

function evaluateFit(fit: FitParams, t: number): number {
  const p = (name: string) => fit.params.get(name) ?? 0;
  switch (fit.model) {
    case "exp":
      return p("A") * Math.exp(-t / p("T1")) + p("offset");
    case "exp-plus-decaying-sine":
      return (
        p("A") * Math.exp(-t / p("T1")) +
        p("B") *
          Math.exp(-t / p("tau_beat")) *
          Math.cos(2 * Math.PI * p("f_beat") * t + p("phase")) +
        p("offset")
      );
    case "decaying-sine":
      return (
        p("A") * Math.exp(-t / p("T1")) *
          Math.cos(2 * Math.PI * p("f_beat") * t + p("phase")) +
        p("offset")
      );
    default:
      throw new SchemaError(`unknown fit model "${fit.model}"`);
  }
}

/** Decay signal with its fitted curve and the fitted lifetime in the legend. */
export function renderDecayFit(signal: TwoColumn, fit: FitParams, dpi = 96): string {
  const area = plotArea();
  const tUs = signal.x.map((t) => t * 1e6);
  const xs = linearScale(extent(tUs), area.x);
  const ys = linearScale(extent(signal.y), area.y);
  const points = signal.x
    .map(
      (t, i) =>
        `<circle cx="${fmt(xs(t * 1e6))}" cy="${fmt(ys(signal.y[i]))}" r="2.2" fill="#1f77b4"/>`,
    )
    .join("\n");
  const n = 400;
  const t0 = signal.x[0];
  const t1 = signal.x[signal.x.length - 1];
  const fx: number[] = [];
  const fy: number[] = [];
  for (let i = 0; i < n; i++) {
    const t = t0 + ((t1 - t0) * i) / (n - 1);
    fx.push(xs(t * 1e6));
    fy.push(ys(evaluateFit(fit, t)));
  }
  const lifetime = fit.params.get("T1");
  const legend =
    lifetime !== undefined
      ? `<text x="${WIDTH - MARGIN.right - 8}" y="${MARGIN.top + 18}" text-anchor="end" font-size="13">fit ${fit.model}: lifetime ${fmt(lifetime * 1e6)} us</text>`
      : "";
  const body =
    points +
    "\n" +
    polyline(fx, fy, "#000000", 1.5) +
    "\n" +
    legend +
    "\n" +
    axes(xs, ys, {
      xLabel: "delay (us)",
      yLabel: "population",
      title: "phonon coherence decay",
    });
  return document(body, dpi);
}

/** Coupling strengths versus mode frequency offset. */
export function renderEnvelope(modes: ModeRow[], dpi = 96): string {
  if (modes.length === 0) throw new SchemaError("mode table is empty");
  const area = plotArea();
  const f0 = modes[0].omegaHz;
  const xVals = modes.map((m) => (m.omegaHz - f0) / 1e6);
  const yVals = modes.map((m) => Math.abs(m.gHz) / 1e3);
  const xs = linearScale(extent(xVals), area.x);
  const ys = linearScale([0, extent(yVals)[1]], area.y);
  const stems = modes
    .map(
      (m, i) =>
        `<line x1="${fmt(xs(xVals[i]))}" y1="${fmt(ys(0))}" x2="${fmt(xs(xVals[i]))}" y2="${fmt(ys(yVals[i]))}" stroke="#1f77b4" stroke-width="1"/>`,
    )
    .join("\n");
  const dots = modes
    .map(
      (m, i) =>
        `<circle cx="${fmt(xs(xVals[i]))}" cy="${fmt(ys(yVals[i]))}" r="2.5" fill="#d62728"/>`,
    )
    .join("\n");
  const body =
    stems +
    "\n" +
    dots +
    "\n" +
    axes(xs, ys, {
      xLabel: "mode frequency - m=0 (MHz)",
      yLabel: "|g| (kHz)",
      title: `qubit-phonon couplings, l = ${modes[0].l}`,
    });
  return document(body, dpi);
}

/** Resonance spectrum from a beam-propagation frequency sweep. */
export function renderSpectrum(spectrum: TwoColumn, dpi = 96): string {
  const area = plotArea();
  const f0 = spectrum.x[0];
  const xVals = spectrum.x.map((f) => (f - f0) / 1e6);
  const xs = linearScale(extent(xVals), area.x);
  const ys = linearScale([0, extent(spectrum.y)[1]], area.y);
  const body =
    polyline(xVals.map(xs), spectrum.y.map(ys), "#1f77b4", 1.5) +
    "\n" +
    axes(xs, ys, {
      xLabel: `frequency - ${fmt(f0 / 1e9)} GHz (MHz)`,
      yLabel: "integrated intensity",
      title: "acoustic resonances",
    });
  return document(body, dpi);
}

/** Radial intensity cross-section of a converged mode profile. */
export function renderProfile(profile: ModeProfile, dpi = 96): string {
  const area = plotArea();
  const section = centerCrossSection(profile);
  const xUm = section.x.map((x) => x * 1e6);
  const peak = extent(section.y)[1] || 1;
  const norm = section.y.map((v) => v / peak);
  const xs = linearScale(extent(xUm), area.x);
  const ys = linearScale([0, 1], area.y);
  const body =
    polyline(xUm.map(xs), norm.map(ys), "#1f77b4", 1.5) +
    "\n" +
    axes(xs, ys, {
      xLabel: "transverse position (um)",
      yLabel: "normalized intensity",
      title: "acoustic mode cross-section",
    });
  return document(body, dpi);
}

/** Maximum value plot from spectroscopy reduction. */
export function renderMaxValue(plot: TwoColumn, dpi = 96): string {
  const area = plotArea();
  const f0 = plot.x[0];
  const xVals = plot.x.map((f) => (f - f0) / 1e6);
  const xs = linearScale(extent(xVals), area.x);
  const ys = linearScale(extent(plot.y), area.y);
  const body =
    polyline(xVals.map(xs), plot.y.map(ys), "#1f77b4", 1.5) +
    "\n" +
    axes(xs, ys, {
      xLabel: `frequency - ${fmt(f0 / 1e9)} GHz (MHz)`,
      yLabel: "max amplitude",
      title: "maximum value plot",
    });
  return document(body, dpi);
}
