"""Experiment-level sequences: swap calibration, phonon T1/T2, and fitting.

The phonon coherence protocols mirror the measurement sequence: a resonant
swap pulse loads the excitation into the phonon field, the field evolves
freely for a delay tau, and a second swap retrieves it. For the dense
semi-continuum basis the retrieved population reduces to the squared
overlap of the evolved strain field with the initial one,

    |eta(tau)|^2,   eta(tau) = sum_m |c_m|^2 e^{i delta_m tau},

with weights normalized after the swap. The Ramsey variant with an
artificial detuning Omega reads (1 + Re[e^{i Omega tau} eta(tau)]) / 2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .core import ModeBasis
from .dynamics import (
    AmplitudeState,
    NumericalError,
    QubitParams,
    amplitude_evolve,
    rabi_map,
)

__all__ = [
    "SwapPulse",
    "OverlapSignal",
    "DecaySignal",
    "SignalKind",
    "FitModel",
    "FitResult",
    "CalibrationError",
    "first_local_minimum",
    "calibrate_swap",
    "overlap_signal",
    "swap_mode_weights",
    "phonon_t1_signal",
    "phonon_t2_signal",
    "swap_delay_swap_population",
    "t1_vs_swap_amplitude",
    "fit_decay",
    "decay_signal_csv",
    "fit_result_csv",
    "sweep_csv",
]

# Detuning between qubit parking frequency and the phonons during storage;
# residual qubit population beats against the phonon at this frequency.
DEFAULT_STORAGE_DETUNING = 2 * math.pi * 3e6

PLATEAU_TOL = 1e-6


class CalibrationError(RuntimeError):
    """Swap calibration could not locate a usable population minimum."""


class SignalKind(enum.Enum):
    T1 = "t1"
    T2 = "t2"
    RABI_AMPLITUDE_SWEEP = "rabi-amplitude-sweep"


class FitModel(enum.Enum):
    EXP = "exp"
    EXP_PLUS_DECAYING_SINE = "exp-plus-decaying-sine"
    DECAYING_SINE = "decaying-sine"


@dataclass(frozen=True)
class SwapPulse:
    """Detuning step implementing a qubit-phonon swap."""

    delta_q_during: float   # rad/s
    duration: float         # s
    rise_time: float = 0.0  # s; 0 = instantaneous step

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("swap duration must be positive")
        if self.rise_time < 0:
            raise ValueError("rise time cannot be negative")


@dataclass(frozen=True)
class OverlapSignal:
    """Free-evolution autocorrelation eta(tau) and the weights behind it."""

    tau_axis: np.ndarray
    eta: np.ndarray
    mode_weights: np.ndarray

    def __post_init__(self):
        if abs(self.mode_weights.sum() - 1.0) > 1e-10:
            raise ValueError("mode weights must be normalized")
        if abs(abs(self.eta[0]) - 1.0) > 1e-10 and self.tau_axis[0] == 0.0:
            raise ValueError("eta(0) must have unit magnitude")


@dataclass(frozen=True)
class DecaySignal:
    t_axis: np.ndarray
    value: np.ndarray
    kind: SignalKind

    def __post_init__(self):
        v = np.asarray(self.value, dtype=float)
        if v.size and (v.min() < -0.05 or v.max() > 1.05):
            raise ValueError("decay signal values must be populations in [0, 1]")


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    params: dict[str, float]
    stderr: dict[str, float]
    residual_rms: float
    converged: bool


def first_local_minimum(values: np.ndarray, plateau_tol: float = PLATEAU_TOL) -> int | None:
    """Index of the first interior local minimum, or None.

    Steps smaller than ``plateau_tol`` count as flat; a minimum is a descent
    followed (possibly across a plateau) by an ascent, and ties resolve to
    the earliest index of the plateau.
    """
    v = np.asarray(values, dtype=float)
    descended = False
    candidate = None
    for i in range(1, v.size):
        step = v[i] - v[i - 1]
        if step < -plateau_tol:
            descended = True
            candidate = i
        elif step > plateau_tol:
            if descended:
                return candidate
            descended = False
            candidate = None
    return None


def calibrate_swap(
    basis: ModeBasis,
    qubit: QubitParams,
    detuning_grid: np.ndarray,
    time_grid: np.ndarray,
    engine: str = "amplitude",
    workers: int = 1,
) -> SwapPulse:
    """Pick the (detuning, duration) that most efficiently empties the qubit.

    For each detuning the pulse length is the first local minimum in time of
    the qubit population; the calibrated pulse is the one whose minimum is
    deepest across the grid.
    """
    rmap = rabi_map(basis, qubit, detuning_grid, time_grid, engine=engine, workers=workers)
    best: tuple[float, float, float] | None = None
    for row, dq in zip(rmap.population, rmap.detuning_axis):
        i = first_local_minimum(row)
        if i is None:
            continue
        if best is None or row[i] < best[0]:
            best = (float(row[i]), float(dq), float(rmap.time_axis[i]))
    if best is None:
        raise CalibrationError(
            "no local minimum of the qubit population in the calibration window"
        )
    _, delta_q, duration = best
    return SwapPulse(delta_q_during=delta_q, duration=duration)


def _evolve_through_swap(
    basis: ModeBasis,
    qubit: QubitParams,
    swap: SwapPulse,
    initial: AmplitudeState | None = None,
    lossless: bool = False,
    ramp_from: float = DEFAULT_STORAGE_DETUNING,
) -> AmplitudeState:
    """Amplitudes after one swap pulse (optional linear detuning ramp)."""
    t1 = math.inf if lossless else qubit.t1_qubit
    if swap.rise_time == 0.0:
        params = QubitParams(t1_qubit=t1, detuning_delta_q=swap.delta_q_during)
        return amplitude_evolve(
            basis, params, initial=initial, duration=swap.duration
        ).final_state()
    # Linear ramp from the parking detuning down to the swap detuning,
    # approximated by short constant-detuning slices.
    n_slices = 16
    state = initial
    ramp = np.linspace(ramp_from, swap.delta_q_during, n_slices)
    dt = swap.rise_time / n_slices
    for dq in ramp:
        params = QubitParams(t1_qubit=t1, detuning_delta_q=float(dq))
        state = amplitude_evolve(basis, params, initial=state, duration=dt).final_state()
    params = QubitParams(t1_qubit=t1, detuning_delta_q=swap.delta_q_during)
    return amplitude_evolve(
        basis, params, initial=state, duration=swap.duration
    ).final_state()


def swap_mode_weights(
    basis: ModeBasis, qubit: QubitParams, swap: SwapPulse
) -> np.ndarray:
    """Normalized phonon weights |c_m|^2 left by the swap pulse."""
    state = _evolve_through_swap(basis, qubit, swap)
    w = np.abs(np.asarray(state.c_modes)) ** 2
    total = w.sum()
    if total <= 0:
        raise NumericalError("swap transferred no population into the phonons")
    return w / total


def overlap_signal(
    weights: np.ndarray, detunings: np.ndarray, tau_axis: np.ndarray
) -> OverlapSignal:
    """eta(tau) = sum_m w_m e^{i delta_m tau} for normalized weights."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    w = w / w.sum()
    tau = np.asarray(tau_axis, dtype=float)
    eta = np.exp(1j * np.outer(tau, np.asarray(detunings))) @ w
    return OverlapSignal(tau_axis=tau, eta=eta, mode_weights=w)


def phonon_t1_signal(
    basis: ModeBasis,
    qubit: QubitParams,
    swap: SwapPulse,
    tau_axis: np.ndarray,
    full_sequence: bool = False,
    storage_detuning: float = DEFAULT_STORAGE_DETUNING,
    include_decay_during_second_swap: bool = False,
) -> DecaySignal:
    """Retrieved-population decay of a stored phonon versus delay.

    Default: the squared overlap |eta(tau)|^2 of the freely evolved phonon
    field with the stored one (second swap assumed perfect and decay-free).
    ``full_sequence=True`` simulates swap - delay - swap explicitly instead,
    including residual qubit population interfering at the storage detuning.
    """
    if full_sequence:
        pop = swap_delay_swap_population(
            basis, qubit, swap, tau_axis,
            storage_detuning=storage_detuning,
            include_decay_during_second_swap=include_decay_during_second_swap,
        )
        return DecaySignal(t_axis=np.asarray(tau_axis, float), value=pop, kind=SignalKind.T1)
    w = swap_mode_weights(basis, qubit, swap)
    sig = overlap_signal(w, basis.detunings, tau_axis)
    return DecaySignal(
        t_axis=sig.tau_axis, value=np.abs(sig.eta) ** 2, kind=SignalKind.T1
    )


def phonon_t2_signal(
    basis: ModeBasis,
    qubit: QubitParams,
    swap: SwapPulse,
    tau_axis: np.ndarray,
    artificial_detuning: float,
) -> DecaySignal:
    """Ramsey fringe of the stored phonon with artificial detuning Omega.

    The second pi/2 pulse phase advances at the storage detuning plus Omega,
    which cancels the storage frame and leaves (1 + Re[e^{i Omega tau} eta])/2.
    """
    w = swap_mode_weights(basis, qubit, swap)
    sig = overlap_signal(w, basis.detunings, tau_axis)
    value = (1.0 + np.real(np.exp(1j * artificial_detuning * sig.tau_axis) * sig.eta)) / 2.0
    return DecaySignal(t_axis=sig.tau_axis, value=value, kind=SignalKind.T2)


def swap_delay_swap_population(
    basis: ModeBasis,
    qubit: QubitParams,
    swap: SwapPulse,
    tau_axis: np.ndarray,
    storage_detuning: float = DEFAULT_STORAGE_DETUNING,
    include_decay_during_second_swap: bool = False,
) -> np.ndarray:
    """Qubit population after swap - delay(tau) - swap, per delay."""
    stored = _evolve_through_swap(basis, qubit, swap, ramp_from=storage_detuning)
    storage = QubitParams(t1_qubit=qubit.t1_qubit, detuning_delta_q=storage_detuning)
    out = np.empty(len(tau_axis))
    for i, tau in enumerate(np.asarray(tau_axis, dtype=float)):
        if tau > 0:
            state = amplitude_evolve(
                basis, storage, initial=stored, duration=float(tau)
            ).final_state()
        else:
            state = stored
        retrieved = _evolve_through_swap(
            basis, qubit, swap, initial=state,
            lossless=not include_decay_during_second_swap,
            ramp_from=storage_detuning,
        )
        out[i] = retrieved.qubit_population
    return out


def t1_vs_swap_amplitude(
    basis: ModeBasis,
    qubit: QubitParams,
    detuning_grid: np.ndarray,
    delay_axis: np.ndarray,
    swap_time_grid: np.ndarray | None = None,
    storage_detuning: float = DEFAULT_STORAGE_DETUNING,
    workers: int = 1,
) -> list[tuple[float, float, FitResult]]:
    """Effective qubit T1 versus swap-pulse detuning.

    Per detuning: the pulse length is set to the first local minimum of the
    vacuum-Rabi trace (grid end if the trace is monotone), the full
    swap - delay - swap sequence is simulated, and the retrieved population
    is fit to an exponential. Fit failures are flagged and the sweep continues.
    """
    if swap_time_grid is None:
        swap_time_grid = np.linspace(0.0, 2e-6, 201)
    rmap = rabi_map(basis, qubit, detuning_grid, swap_time_grid, workers=workers)
    results = []
    for row, dq in zip(rmap.population, rmap.detuning_axis):
        i = first_local_minimum(row)
        if i is None:
            i = int(np.argmin(row))
        swap = SwapPulse(delta_q_during=float(dq), duration=float(swap_time_grid[i]))
        pop = swap_delay_swap_population(
            basis, qubit, swap, delay_axis, storage_detuning=storage_detuning
        )
        signal = DecaySignal(
            t_axis=np.asarray(delay_axis, float), value=pop,
            kind=SignalKind.RABI_AMPLITUDE_SWEEP,
        )
        # effective T1 tracks the envelope, not mode beating: seed the decay
        # time at the observation window so the fit settles on the mean decay
        tail = float(pop[len(pop) // 2 :].mean())
        guess = {
            "A": float(pop[0] - tail),
            "T1": float(signal.t_axis[-1] - signal.t_axis[0]),
            "offset": tail,
        }
        fit = fit_decay(signal, FitModel.EXP, initial_guess=guess)
        results.append((float(dq), fit.params["T1"], fit))
    return results


# ---------------------------------------------------------------------------
# Nonlinear least-squares fitting


def _model_exp(t, p):
    A, T1, off = p
    return A * np.exp(-t / T1) + off


def _model_exp_sine(t, p):
    A, T1, B, tau_beat, f_beat, phase, off = p
    return (
        A * np.exp(-t / T1)
        + B * np.exp(-t / tau_beat) * np.cos(2 * np.pi * f_beat * t + phase)
        + off
    )


def _model_decaying_sine(t, p):
    A, T1, f_beat, phase, off = p
    return A * np.exp(-t / T1) * np.cos(2 * np.pi * f_beat * t + phase) + off


_PARAM_NAMES = {
    FitModel.EXP: ("A", "T1", "offset"),
    FitModel.EXP_PLUS_DECAYING_SINE: ("A", "T1", "B", "tau_beat", "f_beat", "phase", "offset"),
    FitModel.DECAYING_SINE: ("A", "T1", "f_beat", "phase", "offset"),
}

_MODEL_FUNCS = {
    FitModel.EXP: _model_exp,
    FitModel.EXP_PLUS_DECAYING_SINE: _model_exp_sine,
    FitModel.DECAYING_SINE: _model_decaying_sine,
}


def _periodogram_peak(t: np.ndarray, y: np.ndarray) -> float:
    """Dominant non-DC frequency of a detrended, Hann-windowed signal."""
    resid = y - np.polyval(np.polyfit(t, y, 2), t)
    n = len(t)
    padded = 1 << max(12, (4 * n - 1).bit_length())
    power = np.abs(np.fft.rfft(resid * np.hanning(n), padded)) ** 2
    freqs = np.fft.rfftfreq(padded, t[1] - t[0])
    # skip the window-scale lobe: require at least ~2 oscillations in the span
    lo = 2.0 / (t[-1] - t[0])
    mask = freqs > lo
    if not mask.any() or power[mask].max() == 0:
        return lo
    return float(freqs[mask][np.argmax(power[mask])])


def _log_linear_t1(t: np.ndarray, y: np.ndarray) -> float:
    floor = y.min()
    pos = y - floor + 1e-12
    slope = np.polyfit(t, np.log(pos), 1)[0]
    if slope >= 0:
        return float(t[-1] - t[0])
    return float(-1.0 / slope)


def _initial_guess(model: FitModel, t: np.ndarray, y: np.ndarray) -> list[float]:
    off = float(y.min()) if model is not FitModel.DECAYING_SINE else float(y.mean())
    amp = float(y[0] - off)
    t1 = _log_linear_t1(t, y)
    if model is FitModel.EXP:
        return [amp, t1, off]
    f = _periodogram_peak(t, y)
    if model is FitModel.DECAYING_SINE:
        return [max(abs(amp), float(y.std())), t1, f, 0.0, off]
    return [amp, t1, 0.25 * max(abs(amp), 1e-3), t1, f, 0.0, off]


def fit_decay(
    signal: DecaySignal,
    model: FitModel,
    initial_guess: dict[str, float] | None = None,
) -> FitResult:
    """Deterministic trust-region least squares of a decay signal.

    Missing initial guesses come from a log-linear fit (lifetimes) and a
    detrended periodogram peak (beat frequency). When the caller supplies
    ``f_beat`` the fit is constrained to a band of +/-40% around it, pinning
    the fit to the intended spectral component. Non-convergence is reported
    through ``converged=False`` with best-effort parameters.
    """
    t = np.asarray(signal.t_axis, dtype=float)
    y = np.asarray(signal.value, dtype=float)
    if t.size < 8:
        raise ValueError("need at least 8 samples to fit")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time axis must be strictly increasing")

    names = _PARAM_NAMES[model]
    func = _MODEL_FUNCS[model]
    p0 = _initial_guess(model, t, y)
    if initial_guess:
        for i, name in enumerate(names):
            if name in initial_guess:
                p0[i] = float(initial_guess[name])

    lower = np.full(len(p0), -np.inf)
    upper = np.full(len(p0), np.inf)
    for i, name in enumerate(names):
        if name in ("T1", "tau_beat"):
            lower[i] = 1e-12
            p0[i] = max(p0[i], 1e-9)
        if name == "f_beat":
            if initial_guess and "f_beat" in initial_guess:
                lower[i] = 0.6 * p0[i]
                upper[i] = 1.4 * p0[i]
            else:
                lower[i] = 0.0

    scales = np.array([max(abs(v), 1e-3 * (abs(t[-1]) if n in ("T1", "tau_beat") else 1.0))
                       for v, n in zip(p0, names)])
    try:
        res = least_squares(
            lambda p: func(t, p) - y,
            np.clip(p0, lower, upper),
            bounds=(lower, upper),
            method="trf",
            x_scale=scales,
            max_nfev=20000,
        )
        converged = bool(res.status > 0)
        popt = res.x
        residual = func(t, popt) - y
        stderr = _param_stderr(res.jac, residual, len(popt))
    except Exception:
        converged = False
        popt = np.asarray(p0)
        residual = func(t, popt) - y
        stderr = np.full(len(popt), math.nan)

    rms = float(np.sqrt(np.mean(residual**2)))
    return FitResult(
        model=model,
        params={n: float(v) for n, v in zip(names, popt)},
        stderr={n: float(s) for n, s in zip(names, stderr)},
        residual_rms=rms,
        converged=converged,
    )


def _param_stderr(jac: np.ndarray, residual: np.ndarray, n_params: int) -> np.ndarray:
    dof = max(len(residual) - n_params, 1)
    sigma2 = float(residual @ residual) / dof
    try:
        cov = np.linalg.inv(jac.T @ jac) * sigma2
        return np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        return np.full(n_params, math.nan)


# ---------------------------------------------------------------------------
# CSV renderings


def decay_signal_csv(signal: DecaySignal) -> str:
    lines = ["tau_s,value"]
    for t, v in zip(signal.t_axis, signal.value):
        lines.append(f"{float(t)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def fit_result_csv(fit: FitResult) -> str:
    lines = ["model,param,value,stderr"]
    for name, value in fit.params.items():
        lines.append(f"{fit.model.value},{name},{value!r},{fit.stderr[name]!r}")
    return "\n".join(lines) + "\n"


def sweep_csv(points: list[tuple[float, float, FitResult]]) -> str:
    lines = ["delta_q_hz,t1_eff_s,converged"]
    for dq, t1_eff, fit in points:
        lines.append(f"{dq / (2 * math.pi)!r},{t1_eff!r},{str(fit.converged).lower()}")
    return "\n".join(lines) + "\n"
