"""Synthetic spectroscopy maps shared by the analysis and CLI tests."""

import math

import numpy as np

from phonon_qed.analysis import SpectroscopyMap


def lorentzian(f, f0, width):
    return 1.0 / (1.0 + ((f - f0) / width) ** 2)


def avoided_crossing_map(f_mode: float, g: float, n_x=61, n_f=161, span=4e6,
                         width=80e3) -> SpectroscopyMap:
    """Two-branch anticrossing: qubit tuned through a fixed mode frequency.

    Branch frequencies are the 2x2 eigenvalues (fq+fm)/2 +/- sqrt(d^2/4+g^2);
    amplitude weights follow the qubit fraction of each dressed state.
    """
    x = np.linspace(-1.0, 1.0, n_x)
    f_qubit = f_mode + x * span / 2
    freqs = np.linspace(f_mode - span / 2, f_mode + span / 2, n_f)
    amp = np.zeros((n_f, n_x))
    for k, fq in enumerate(f_qubit):
        half_delta = (fq - f_mode) / 2
        split = math.hypot(half_delta, g)
        upper = (fq + f_mode) / 2 + split
        lower = (fq + f_mode) / 2 - split
        w_up = 0.5 * (1 + half_delta / split)
        w_lo = 1 - w_up
        amp[:, k] = w_up * lorentzian(freqs, upper, width) + w_lo * lorentzian(
            freqs, lower, width
        )
    return SpectroscopyMap(x_axis=x, freq_axis=freqs, amplitude=amp)
