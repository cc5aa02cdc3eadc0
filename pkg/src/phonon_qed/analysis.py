"""Reduction of 2D spectroscopy maps: max-value plots, features, velocity fit.

A spectroscopy map is amplitude versus (x, frequency) where x is whatever
got swept (coil current, detuning). Collapsing each frequency row to its
maximum over x gives a "maximum value plot" whose deepest dip marks the main
anticrossing; collecting that feature across several longitudinal overtones
and fitting frequency versus mode number yields the longitudinal sound
velocity through slope = v_l / 2h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectroscopyMap",
    "MaxValuePlot",
    "FeatureResult",
    "max_value_plot",
    "extract_main_feature",
    "fit_longitudinal_velocity",
    "read_matrix_csv",
    "write_matrix_csv",
    "max_value_csv",
    "features_csv",
]


@dataclass(frozen=True)
class SpectroscopyMap:
    x_axis: np.ndarray
    freq_axis: np.ndarray     # Hz
    amplitude: np.ndarray     # shape (len(freq_axis), len(x_axis))

    def __post_init__(self):
        if self.amplitude.shape != (self.freq_axis.size, self.x_axis.size):
            raise ValueError("amplitude shape must be (freq, x)")
        if not np.all(np.isfinite(self.amplitude)):
            raise ValueError("amplitudes must be finite")


@dataclass(frozen=True)
class MaxValuePlot:
    freq_axis: np.ndarray
    max_amplitude: np.ndarray


@dataclass(frozen=True)
class FeatureResult:
    frequency: float      # Hz
    low_confidence: bool


def max_value_plot(spec_map: SpectroscopyMap) -> MaxValuePlot:
    """Row maximum over the x axis for each frequency."""
    if spec_map.x_axis.size == 0 or spec_map.freq_axis.size == 0:
        raise ValueError("map must be non-empty")
    return MaxValuePlot(
        freq_axis=spec_map.freq_axis,
        max_amplitude=spec_map.amplitude.max(axis=1),
    )


def extract_main_feature(plot: MaxValuePlot) -> FeatureResult:
    """Frequency of the deepest dip, refined with a three-point parabola.

    A plot with no interior minimum (monotone) returns the lower endpoint
    and sets ``low_confidence``. A flat plot has no feature at all.
    """
    f = np.asarray(plot.freq_axis, dtype=float)
    v = np.asarray(plot.max_amplitude, dtype=float)
    if f.size < 16:
        raise ValueError("need at least 16 points to extract a feature")
    if v.max() - v.min() < 1e-12:
        raise ValueError("flat maximum value plot: no feature present")
    i = int(np.argmin(v))
    if i == 0 or i == v.size - 1:
        return FeatureResult(frequency=float(f[i]), low_confidence=True)
    # parabolic sub-bin refinement through the three points around the dip
    y0, y1, y2 = v[i - 1], v[i], v[i + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    shift = float(np.clip(shift, -0.5, 0.5))
    step = f[i + 1] - f[i] if shift >= 0 else f[i] - f[i - 1]
    return FeatureResult(frequency=float(f[i] + shift * step), low_confidence=False)


def fit_longitudinal_velocity(
    features: list[tuple[int, float]], substrate_thickness_h: float
) -> tuple[float, float, float]:
    """Ordinary least squares of feature frequency (Hz) versus mode number l.

    Returns (v_l, intercept_hz, stderr_v_l); the slope is one free spectral
    range, so v_l = slope * 2h.
    """
    if len(features) < 2:
        raise ValueError("need at least two (l, frequency) points")
    ls = np.array([l for l, _ in features], dtype=float)
    fs = np.array([f for _, f in features], dtype=float)
    if np.unique(ls).size != ls.size:
        raise ValueError("mode numbers must be distinct")
    slope, intercept = np.polyfit(ls, fs, 1)
    resid = fs - (slope * ls + intercept)
    dof = max(ls.size - 2, 1)
    denom = np.sum((ls - ls.mean()) ** 2)
    slope_err = math.sqrt(float(resid @ resid) / dof / denom) if denom > 0 else math.inf
    twoh = 2.0 * substrate_thickness_h
    return float(slope * twoh), float(intercept), float(slope_err * twoh)


# ---------------------------------------------------------------------------
# Repo-wide matrix CSV convention: first row x axis, first column freq axis,
# corner cell empty.


def read_matrix_csv(text: str) -> SpectroscopyMap:
    lines = [line for line in text.strip().splitlines() if line.strip()]
    if len(lines) < 2:
        raise ValueError("matrix CSV needs a header row and at least one data row")
    x_axis = np.array([float(tok) for tok in lines[0].split(",")[1:]])
    freq = []
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        freq.append(float(cells[0]))
        row = [float(tok) for tok in cells[1:]]
        if len(row) != x_axis.size:
            raise ValueError("ragged matrix CSV row")
        rows.append(row)
    return SpectroscopyMap(
        x_axis=x_axis, freq_axis=np.array(freq), amplitude=np.array(rows)
    )


def write_matrix_csv(spec_map: SpectroscopyMap) -> str:
    header = "," + ",".join(repr(float(x)) for x in spec_map.x_axis)
    lines = [header]
    for f, row in zip(spec_map.freq_axis, spec_map.amplitude):
        lines.append(f"{float(f)!r}," + ",".join(f"{v:.8e}" for v in row))
    return "\n".join(lines) + "\n"


def max_value_csv(plot: MaxValuePlot) -> str:
    lines = ["freq_hz,max_amplitude"]
    for f, v in zip(plot.freq_axis, plot.max_amplitude):
        lines.append(f"{float(f)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def features_csv(features: list[tuple[int, float]]) -> str:
    lines = ["l,freq_hz"]
    for l, f in features:
        lines.append(f"{l},{float(f)!r}")
    return "\n".join(lines) + "\n"
