"""Protocol tests: calibration, coherence signals, fits, sweeps."""

import math

import numpy as np
import pytest

from phonon_qed.core import MaterialConstants, Picture, ResonatorGeometry, build_basis
from phonon_qed.dynamics import QubitParams
from phonon_qed.protocols import (
    CalibrationError,
    DecaySignal,
    FitModel,
    SignalKind,
    SwapPulse,
    calibrate_swap,
    decay_signal_csv,
    first_local_minimum,
    fit_decay,
    fit_result_csv,
    overlap_signal,
    phonon_t1_signal,
    phonon_t2_signal,
    swap_delay_swap_population,
    swap_mode_weights,
    sweep_csv,
    t1_vs_swap_amplitude,
)

GEOM = ResonatorGeometry()
MAT = MaterialConstants(coupling_scale=0.85)
QUBIT = QubitParams(t1_qubit=6e-6)


@pytest.fixture(scope="module")
def single_mode():
    return build_basis(503, Picture.DISCRETE, 1, GEOM, MAT)


@pytest.fixture(scope="module")
def discrete4():
    return build_basis(503, Picture.DISCRETE, 4, GEOM, MAT)


@pytest.fixture(scope="module")
def semi81():
    return build_basis(503, Picture.SEMI_CONTINUUM, 81, GEOM, MAT)


@pytest.fixture(scope="module")
def semi81_swap(semi81):
    detunings = 2 * math.pi * np.linspace(-1.0e6, 1.5e6, 26)
    times = np.linspace(0, 2e-6, 101)
    return calibrate_swap(semi81, QUBIT, detunings, times)


class TestFirstLocalMinimum:
    def test_plain_minimum(self):
        assert first_local_minimum(np.array([3.0, 1.0, 2.0, 0.5, 4.0])) == 1

    def test_monotone_returns_none(self):
        assert first_local_minimum(np.array([3.0, 2.0, 1.0, 0.5])) is None

    def test_plateau_ties_resolve_earliest(self):
        v = np.array([2.0, 1.0, 1.0 + 1e-9, 1.0, 2.0])
        assert first_local_minimum(v) == 1


class TestCalibrateSwap:
    def test_single_mode_resonant_half_period(self, single_mode):
        # lossless qubit: the first population zero sits exactly at pi/(2g)
        g = single_mode.couplings[0]
        times = np.linspace(0, 2e-6, 401)
        detunings = np.array([0.0])
        swap = calibrate_swap(single_mode, QubitParams(t1_qubit=math.inf),
                              detunings, times)
        assert swap.duration == pytest.approx(math.pi / (2 * g), abs=times[1] - times[0])
        assert swap.delta_q_during == 0.0

    def test_single_mode_decay_shifts_minimum_early(self, single_mode):
        # with qubit decay the amplitude zero moves to tan(wt) = 2w/gamma
        g = single_mode.couplings[0]
        gamma = QUBIT.gamma_q
        w = math.sqrt(g * g - gamma * gamma / 4)
        expected = math.atan(2 * w / gamma) / w
        times = np.linspace(0, 2e-6, 401)
        swap = calibrate_swap(single_mode, QUBIT, np.array([0.0]), times)
        assert swap.duration == pytest.approx(expected, abs=times[1] - times[0])

    def test_discrete4_device_basis(self, discrete4):
        detunings = 2 * math.pi * np.linspace(-0.6e6, 0.6e6, 25)
        times = np.linspace(0, 2e-6, 201)
        swap = calibrate_swap(discrete4, QUBIT, detunings, times)
        assert 0.4e-6 <= swap.duration <= 1.2e-6
        state = swap_mode_weights(discrete4, QUBIT, swap)
        # residual qubit population at the calibrated point
        from phonon_qed.dynamics import amplitude_evolve

        traj = amplitude_evolve(
            discrete4,
            QubitParams(t1_qubit=QUBIT.t1_qubit, detuning_delta_q=swap.delta_q_during),
            duration=swap.duration,
        )
        assert traj.qubit_population[-1] < 0.1

    def test_semi_continuum_transfer_efficiency(self, semi81, semi81_swap):
        from phonon_qed.dynamics import amplitude_evolve

        traj = amplitude_evolve(
            semi81,
            QubitParams(t1_qubit=QUBIT.t1_qubit, detuning_delta_q=semi81_swap.delta_q_during),
            duration=semi81_swap.duration,
        )
        final = traj.c_modes[-1]
        transferred = np.sum(np.abs(final) ** 2)
        total = transferred + traj.qubit_population[-1]
        assert transferred / total >= 0.85

    def test_finite_rise_time_still_swaps(self, discrete4):
        # 50 ns linear ramp from the storage detuning: transfer barely moves
        base = SwapPulse(delta_q_during=0.0, duration=0.8e-6)
        ramped = SwapPulse(delta_q_during=0.0, duration=0.8e-6, rise_time=50e-9)
        w_base = swap_mode_weights(discrete4, QUBIT, base)
        w_ramp = swap_mode_weights(discrete4, QUBIT, ramped)
        assert w_ramp[0] > 0.8
        assert abs(w_ramp[0] - w_base[0]) < 0.1

    def test_far_detuned_window_fails(self, single_mode):
        g = single_mode.couplings[0]
        # monotone decay only: no local minimum anywhere
        times = np.linspace(0, 0.05 / (g / (2 * math.pi)), 20) * 1e-3
        detunings = np.array([200 * g])
        with pytest.raises(CalibrationError):
            calibrate_swap(single_mode, QUBIT, detunings, np.linspace(0, 2e-8, 10))


class TestOverlapSignal:
    def test_single_mode_constant(self):
        tau = np.linspace(0, 10e-6, 50)
        sig = overlap_signal(np.array([1.0]), np.array([0.0]), tau)
        assert np.allclose(np.abs(sig.eta) ** 2, 1.0, atol=1e-12)

    def test_two_mode_beat_closed_form(self):
        tau = np.linspace(0, 10e-6, 200)
        dw = 2 * math.pi * 0.363e6
        sig = overlap_signal(np.array([0.5, 0.5]), np.array([0.0, dw]), tau)
        assert np.allclose(np.abs(sig.eta) ** 2, np.cos(dw * tau / 2) ** 2, atol=1e-12)

    def test_eta_bounded_by_one(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = rng.integers(2, 30)
            w = rng.random(n)
            det = 2 * math.pi * rng.normal(0, 1e6, n)
            tau = np.linspace(0, 20e-6, 101)
            sig = overlap_signal(w, det, tau)
            assert abs(sig.eta[0]) == pytest.approx(1.0, abs=1e-12)
            assert np.all(np.abs(sig.eta) <= 1 + 1e-12)

    def test_time_scaling_covariance(self):
        rng = np.random.default_rng(11)
        w = rng.random(8)
        det = 2 * math.pi * rng.normal(0, 5e5, 8)
        tau = np.linspace(0, 10e-6, 101)
        base = overlap_signal(w, det, tau)
        doubled = overlap_signal(w, 2 * det, tau / 2)
        assert np.allclose(np.abs(base.eta) ** 2, np.abs(doubled.eta) ** 2, atol=1e-12)

    def test_rejects_negative_weights(self):
        with pytest.raises(ValueError):
            overlap_signal(np.array([0.5, -0.5]), np.array([0.0, 1.0]),
                           np.linspace(0, 1e-6, 10))


class TestPhononT1Signal:
    def test_global_phase_invariance(self, discrete4):
        swap = SwapPulse(delta_q_during=0.0, duration=0.8e-6)
        tau = np.linspace(0, 10e-6, 101)
        a = phonon_t1_signal(discrete4, QUBIT, swap, tau)
        b = phonon_t1_signal(discrete4, QUBIT, swap, tau)
        assert np.array_equal(a.value, b.value)
        # a global phase on the initial amplitudes cannot change |eta|^2:
        # weights are magnitudes squared, so equality above plus the
        # weight-level construction below pins the invariance
        w = swap_mode_weights(discrete4, QUBIT, swap)
        sig = overlap_signal(w, discrete4.detunings, tau)
        assert np.allclose(a.value, np.abs(sig.eta) ** 2, atol=1e-12)

    def test_semi_continuum_fitted_t1(self, semi81, semi81_swap):
        tau = np.linspace(0, 15e-6, 901)
        signal = phonon_t1_signal(semi81, QUBIT, semi81_swap, tau)
        fit = fit_decay(signal, FitModel.EXP)
        assert fit.converged
        assert fit.params["T1"] == pytest.approx(4e-6, abs=2e-6)

    def test_semi_continuum_beat_on_order_of_splitting(self, semi81, semi81_swap):
        # the retrieved-population beat sits on the order of the discrete
        # m0-m1 splitting (the broad semi-continuum weight lobes put the
        # unconstrained fit below the splitting itself; see decisions ledger)
        tau = np.linspace(0, 15e-6, 901)
        signal = phonon_t1_signal(semi81, QUBIT, semi81_swap, tau)
        fit = fit_decay(signal, FitModel.EXP_PLUS_DECAYING_SINE)
        splitting = (
            build_basis(503, Picture.DISCRETE, 2, GEOM, MAT).detunings[1] / (2 * math.pi)
        )
        assert fit.converged
        assert 0.4 * splitting <= fit.params["f_beat"] <= 1.5 * splitting
        assert fit.params["T1"] == pytest.approx(4e-6, abs=2e-6)

    def test_full_sequence_variant_contains_storage_beat(self, discrete4):
        # an imperfect swap leaves residual qubit population that beats at
        # the storage detuning (~3 MHz) against the phonon
        swap = SwapPulse(delta_q_during=0.0, duration=0.45e-6)  # deliberately off
        tau = np.linspace(0, 4e-6, 801)
        sig = phonon_t1_signal(discrete4, QUBIT, swap, tau, full_sequence=True)
        detrended = sig.value - sig.value.mean()
        power = np.abs(np.fft.rfft(detrended * np.hanning(len(tau)), 1 << 13)) ** 2
        freqs = np.fft.rfftfreq(1 << 13, tau[1] - tau[0])
        band = (freqs > 2.2e6) & (freqs < 3.8e6)
        outside = (freqs > 0.3e6) & ~band
        assert power[band].max() > 3 * power[outside].max()


class TestPhononT2Signal:
    def test_single_mode_pure_cosine(self, single_mode):
        g = single_mode.couplings[0]
        swap = SwapPulse(delta_q_during=0.0, duration=math.pi / (2 * g))
        omega_art = 2 * math.pi * 200e3
        tau = np.linspace(0, 20e-6, 801)
        sig = phonon_t2_signal(single_mode, QUBIT, swap, tau, omega_art)
        expected = (1 + np.cos(omega_art * tau)) / 2
        assert np.max(np.abs(sig.value - expected)) < 1e-9

    def test_envelope_factorization(self):
        # slowly varying real eta: signal == (1 + |eta| cos(Omega tau)) / 2
        tau = np.linspace(0, 10e-6, 501)
        w = np.array([0.6, 0.4])
        det = np.array([0.0, 2 * math.pi * 20e3])  # slow relative to Omega
        sig = overlap_signal(w, det, tau)
        omega_art = 2 * math.pi * 1e6
        value = (1 + np.real(np.exp(1j * omega_art * tau) * sig.eta)) / 2
        envelope = (1 + np.abs(sig.eta) * np.cos(omega_art * tau + np.angle(sig.eta))) / 2
        assert np.allclose(value, envelope, atol=1e-12)

    def test_bounds_from_eta(self, discrete4):
        swap = SwapPulse(delta_q_during=0.0, duration=0.8e-6)
        tau = np.linspace(0, 20e-6, 401)
        omega_art = 2 * math.pi * 200e3
        sig = phonon_t2_signal(discrete4, QUBIT, swap, tau, omega_art)
        w = swap_mode_weights(discrete4, QUBIT, swap)
        eta = np.abs(overlap_signal(w, discrete4.detunings, tau).eta)
        assert np.all(sig.value <= (1 + eta) / 2 + 1e-12)
        assert np.all(sig.value >= (1 - eta) / 2 - 1e-12)

    def test_semi_continuum_fitted_t2(self, semi81, semi81_swap):
        tau = np.linspace(0, 15e-6, 901)
        omega_art = 2 * math.pi * 200e3
        signal = phonon_t2_signal(semi81, QUBIT, semi81_swap, tau, omega_art)
        fit = fit_decay(signal, FitModel.DECAYING_SINE,
                        initial_guess={"f_beat": 200e3, "offset": 0.5})
        assert fit.converged
        assert fit.params["T1"] == pytest.approx(7e-6, abs=3.5e-6)
        assert fit.params["f_beat"] == pytest.approx(200e3, rel=0.15)


class TestSwapDelaySwap:
    def test_far_detuned_keeps_qubit_decay(self, single_mode):
        g = single_mode.couplings[0]
        swap = SwapPulse(delta_q_during=50 * g, duration=0.5e-6)
        tau = np.linspace(0, 12e-6, 9)
        pop = swap_delay_swap_population(single_mode, QUBIT, swap, tau)
        signal = DecaySignal(t_axis=tau, value=pop, kind=SignalKind.T1)
        fit = fit_decay(signal, FitModel.EXP)
        assert fit.params["T1"] == pytest.approx(6e-6, rel=0.1)


class TestT1VsSwapAmplitude:
    def test_sweep_shape(self, discrete4):
        g0 = discrete4.couplings[0]
        detunings = np.array([0.0, 2 * math.pi * 8e6])
        delays = np.linspace(0, 20e-6, 21)
        times = np.linspace(0, 2e-6, 101)
        points = t1_vs_swap_amplitude(
            discrete4, QUBIT, detunings, delays, swap_time_grid=times
        )
        assert len(points) == 2
        on_res = points[0]
        far = points[1]
        assert far[2].converged
        assert far[1] == pytest.approx(6e-6, rel=0.1)
        # stored in lossless phonons, the excitation outlives the bare qubit
        assert on_res[1] > 6e-6

    def test_csv_format(self, discrete4):
        detunings = np.array([2 * math.pi * 8e6])
        delays = np.linspace(0, 12e-6, 13)
        points = t1_vs_swap_amplitude(discrete4, QUBIT, detunings, delays)
        lines = sweep_csv(points).strip().splitlines()
        assert lines[0] == "delta_q_hz,t1_eff_s,converged"
        assert len(lines) == 2
        assert lines[1].endswith(("true", "false"))


class TestFitDecay:
    def test_exponential_recovery_with_perturbation(self):
        rng = np.random.default_rng(42)
        t = np.linspace(0, 60e-6, 200)
        y = np.exp(-t / 17e-6) * (1 + 0.01 * rng.standard_normal(t.size))
        fit = fit_decay(DecaySignal(t_axis=t, value=y, kind=SignalKind.T1), FitModel.EXP)
        assert fit.converged
        assert fit.params["T1"] == pytest.approx(17e-6, abs=0.5e-6)

    def test_ramsey_recovery(self):
        t = np.linspace(0, 80e-6, 640)
        y = 0.5 * (1 + np.exp(-t / 27e-6) * np.cos(2 * np.pi * 200e3 * t))
        fit = fit_decay(
            DecaySignal(t_axis=t, value=y, kind=SignalKind.T2), FitModel.DECAYING_SINE
        )
        assert fit.converged
        assert fit.params["T1"] == pytest.approx(27e-6, abs=1e-6)
        assert fit.params["f_beat"] == pytest.approx(200e3, abs=1e3)

    def test_idempotent_refit(self):
        t = np.linspace(0, 50e-6, 120)
        y = 0.8 * np.exp(-t / 9e-6) + 0.1
        first = fit_decay(DecaySignal(t_axis=t, value=y, kind=SignalKind.T1), FitModel.EXP)
        second = fit_decay(
            DecaySignal(t_axis=t, value=y, kind=SignalKind.T1), FitModel.EXP,
            initial_guess=first.params,
        )
        for name, v in first.params.items():
            assert second.params[name] == pytest.approx(v, rel=1e-8, abs=1e-15)

    def test_requires_enough_increasing_samples(self):
        t = np.linspace(0, 1e-6, 5)
        with pytest.raises(ValueError):
            fit_decay(DecaySignal(t_axis=t, value=np.ones(5), kind=SignalKind.T1),
                      FitModel.EXP)
        t_bad = np.array([0.0, 1e-6, 1e-6, 2e-6, 3e-6, 4e-6, 5e-6, 6e-6])
        with pytest.raises(ValueError):
            fit_decay(DecaySignal(t_axis=t_bad, value=np.ones(8), kind=SignalKind.T1),
                      FitModel.EXP)

    def test_csv_format(self):
        t = np.linspace(0, 50e-6, 64)
        y = np.exp(-t / 9e-6)
        fit = fit_decay(DecaySignal(t_axis=t, value=y, kind=SignalKind.T1), FitModel.EXP)
        lines = fit_result_csv(fit).strip().splitlines()
        assert lines[0] == "model,param,value,stderr"
        assert lines[1].startswith("exp,A,")
        sig_lines = decay_signal_csv(
            DecaySignal(t_axis=t, value=y, kind=SignalKind.T1)
        ).strip().splitlines()
        assert sig_lines[0] == "tau_s,value"
        assert len(sig_lines) == 65
