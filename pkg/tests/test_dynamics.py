"""Engine tests: closed-form oracles, cross-engine agreement, conservation laws."""

import math

import numpy as np
import pytest

from phonon_qed.core import MaterialConstants, Picture, ResonatorGeometry, build_basis
from phonon_qed.dynamics import (
    AmplitudeState,
    InitialProductState,
    LindbladConfig,
    QubitParams,
    amplitude_evolve,
    build_hamiltonian,
    lindblad_evolve,
    rabi_map,
    rabi_map_csv,
)

GEOM = ResonatorGeometry()
MAT = MaterialConstants(coupling_scale=0.85)


@pytest.fixture(scope="module")
def discrete4():
    return build_basis(503, Picture.DISCRETE, 4, GEOM, MAT)


@pytest.fixture(scope="module")
def single_mode():
    return build_basis(503, Picture.DISCRETE, 1, GEOM, MAT)


@pytest.fixture(scope="module")
def semi81():
    return build_basis(503, Picture.SEMI_CONTINUUM, 81, GEOM, MAT)


def damped_rabi_population(g: float, gamma: float, t: np.ndarray) -> np.ndarray:
    """Closed form |c_q|^2 for the resonant 2x2 non-Hermitian system.

    c_q'' + gamma c_q' + g^2 c_q = 0 with c_q(0)=1, c_q'(0)=-gamma.
    """
    disc = g * g - gamma * gamma / 4.0
    if disc > 0:
        w = math.sqrt(disc)
        c = np.exp(-gamma * t / 2) * (np.cos(w * t) - (gamma / (2 * w)) * np.sin(w * t))
    else:
        w = math.sqrt(-disc)
        c = np.exp(-gamma * t / 2) * (np.cosh(w * t) - (gamma / (2 * w)) * np.sinh(w * t))
    return np.abs(c) ** 2


class TestHamiltonian:
    def test_single_mode_resonant_block(self, single_mode):
        H = build_hamiltonian(single_mode, delta_q=0.0)
        g = single_mode.couplings[0]
        assert np.allclose(H, np.array([[0, g], [g, 0]]), atol=1e-30)

    def test_hermitian(self, discrete4):
        for fock in (None, 2, 3):
            H = build_hamiltonian(discrete4, delta_q=2 * math.pi * 1e5,
                                  fock_truncation=fock, dimension_cap=4096)
            assert np.array_equal(H, H.conj().T)

    def test_single_excitation_eigenvalues_match_dense_oracle(self, discrete4):
        # oracle: assemble the same physics independently in the product
        # space and compare the single-excitation eigenvalues
        delta_q = 2 * math.pi * 2e5
        H_block = build_hamiltonian(discrete4, delta_q)
        block_eigs = np.sort(np.linalg.eigvalsh(H_block))

        n = 2
        M = len(discrete4)
        sm = np.array([[0, 1], [0, 0]], dtype=complex)
        b = np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)
        eye2 = np.eye(2)
        eyeb = np.eye(n)

        def kron_all(ops):
            out = ops[0]
            for op in ops[1:]:
                out = np.kron(out, op)
            return out

        a_ops = kron_all([sm] + [eyeb] * M)
        H_full = delta_q * a_ops.conj().T @ a_ops
        for m in range(M):
            ops = [eye2] + [eyeb] * M
            ops[1 + m] = b
            bm = kron_all(ops)
            H_full += discrete4.detunings[m] * bm.conj().T @ bm
            H_full += discrete4.couplings[m] * (a_ops.conj().T @ bm + a_ops @ bm.conj().T)

        number_op = a_ops.conj().T @ a_ops
        for m in range(M):
            ops = [eye2] + [eyeb] * M
            ops[1 + m] = b
            bm = kron_all(ops)
            number_op = number_op + bm.conj().T @ bm
        single = np.isclose(np.diag(number_op).real, 1.0)
        H_single = H_full[np.ix_(single, single)]
        oracle_eigs = np.sort(np.linalg.eigvalsh(H_single))
        assert np.allclose(block_eigs, oracle_eigs, atol=1e-10 * np.abs(oracle_eigs).max())

    def test_dimension_guard(self, discrete4):
        with pytest.raises(ValueError, match="cap"):
            build_hamiltonian(discrete4, 0.0, fock_truncation=8, dimension_cap=1024)


class TestAmplitudeEvolve:
    def test_norm_conserved_lossless(self, discrete4):
        qubit = QubitParams(t1_qubit=math.inf)
        traj = amplitude_evolve(discrete4, qubit, duration=20e-6,
                                t_eval=np.linspace(0, 20e-6, 41))
        norms = np.abs(traj.c_q) ** 2 + np.sum(np.abs(traj.c_modes) ** 2, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-8

    def test_resonant_rabi_cosine(self, single_mode):
        qubit = QubitParams(t1_qubit=math.inf)
        t = np.linspace(0, 3e-6, 200)
        traj = amplitude_evolve(single_mode, qubit, duration=t[-1], t_eval=t)
        g = single_mode.couplings[0]
        assert np.max(np.abs(traj.qubit_population - np.cos(g * t) ** 2)) < 1e-6

    def test_damped_rabi_matches_closed_form(self, single_mode):
        qubit = QubitParams(t1_qubit=6e-6)
        t = np.linspace(0, 5e-6, 200)
        traj = amplitude_evolve(single_mode, qubit, duration=t[-1], t_eval=t)
        expected = damped_rabi_population(single_mode.couplings[0], qubit.gamma_q, t)
        assert np.max(np.abs(traj.qubit_population - expected)) < 1e-6

    def test_semi_continuum_initial_irreversible_decay(self, semi81):
        qubit = QubitParams(t1_qubit=6e-6)
        t = np.linspace(0, 4e-6, 161)
        traj = amplitude_evolve(semi81, qubit, duration=t[-1], t_eval=t)
        pop = traj.qubit_population
        # first collapse within ~1 us, far below bare qubit decay alone
        first_us = pop[t <= 1.0e-6]
        assert first_us.min() < 0.1
        # envelope decays irreversibly: successive revival maxima shrink
        peaks = [pop[i] for i in range(1, len(pop) - 1)
                 if pop[i] > pop[i - 1] and pop[i] > pop[i + 1] and pop[i] > 0.1]
        for a, b in zip([1.0] + peaks[:-1], peaks):
            assert b < a
        assert np.all(pop <= 1 + 1e-9)

    def test_rejects_bad_duration_and_size(self, single_mode):
        qubit = QubitParams()
        with pytest.raises(ValueError):
            amplitude_evolve(single_mode, qubit, duration=0.0)
        bad = AmplitudeState(c_q=1.0, c_modes=(0.0, 0.0))
        with pytest.raises(ValueError):
            amplitude_evolve(single_mode, qubit, initial=bad, duration=1e-6)


class TestLindbladEvolve:
    def test_uncoupled_qubit_decay(self, single_mode):
        zero_g = build_basis(503, Picture.DISCRETE, 1, GEOM,
                             MaterialConstants(coupling_scale=1e-30))
        times = np.linspace(0, 10e-6, 21)
        cfg = LindbladConfig(
            basis=zero_g, qubit=QubitParams(t1_qubit=6e-6),
            phonon_t1s=(math.inf,), time_grid=tuple(times),
        )
        traj = lindblad_evolve(cfg)
        assert np.max(np.abs(traj.qubit_population - np.exp(-times / 6e-6))) < 1e-6

    def test_lossless_resonant_mode_rabi(self, single_mode):
        times = np.linspace(0, 2e-6, 41)
        cfg = LindbladConfig(
            basis=single_mode, qubit=QubitParams(t1_qubit=math.inf),
            phonon_t1s=(math.inf,), time_grid=tuple(times),
        )
        traj = lindblad_evolve(cfg)
        g = single_mode.couplings[0]
        assert np.max(np.abs(traj.qubit_population - np.cos(g * times) ** 2)) < 1e-6

    def test_trace_preserved(self, discrete4):
        times = np.linspace(0, 5e-6, 11)
        cfg = LindbladConfig(
            basis=discrete4, qubit=QubitParams(t1_qubit=6e-6),
            phonon_t1s=(20e-6,) * 4, time_grid=tuple(times),
        )
        traj = lindblad_evolve(cfg)
        assert np.max(np.abs(traj.trace - 1.0)) < 1e-8

    def test_excitation_conserved_lossless(self, discrete4):
        times = np.linspace(0, 5e-6, 11)
        cfg = LindbladConfig(
            basis=discrete4, qubit=QubitParams(t1_qubit=math.inf),
            phonon_t1s=(math.inf,) * 4, time_grid=tuple(times),
        )
        traj = lindblad_evolve(cfg)
        total = traj.qubit_population + traj.mode_populations.sum(axis=1)
        assert np.max(np.abs(total - 1.0)) < 1e-8

    def test_engine_equivalence_single_excitation(self, discrete4):
        # identical basis and decay rates: master equation vs amplitude ODE
        times = np.linspace(0, 10e-6, 51)
        qubit = QubitParams(t1_qubit=6e-6)
        cfg = LindbladConfig(
            basis=discrete4, qubit=qubit,
            phonon_t1s=(math.inf,) * 4, time_grid=tuple(times),
        )
        lind = lindblad_evolve(cfg)
        amp = amplitude_evolve(discrete4, qubit, duration=times[-1], t_eval=times)
        assert np.max(np.abs(lind.qubit_population - amp.qubit_population)) <= 1e-6
        assert np.max(np.abs(lind.mode_populations - amp.mode_populations)) <= 1e-6

    def test_initial_state_within_truncation(self, single_mode):
        cfg = LindbladConfig(
            basis=single_mode, qubit=QubitParams(),
            phonon_t1s=(math.inf,), time_grid=(0.0, 1e-6),
        )
        with pytest.raises(ValueError):
            lindblad_evolve(cfg, InitialProductState(qubit_excited=False,
                                                     mode_occupations=(2,)))

    def test_dimension_cap(self, discrete4):
        cfg = LindbladConfig(
            basis=discrete4, qubit=QubitParams(),
            phonon_t1s=(math.inf,) * 4, time_grid=(0.0, 1e-6),
            fock_truncation=5, dimension_cap=1024,
        )
        with pytest.raises(ValueError, match="cap"):
            lindblad_evolve(cfg)


class TestRabiMap:
    def test_far_detuned_column_decays_like_bare_qubit(self, single_mode):
        g = single_mode.couplings[0]
        times = np.linspace(0, 6e-6, 31)
        rmap = rabi_map(
            single_mode, QubitParams(t1_qubit=6e-6),
            detuning_grid=np.array([40 * g]), time_grid=times,
        )
        expected = np.exp(-times / 6e-6)
        assert np.max(np.abs(rmap.population[0] - expected) / expected) < 0.02

    def test_on_resonance_first_zero(self, single_mode):
        g = single_mode.couplings[0]
        times = np.linspace(0, 2e-6, 2001)
        rmap = rabi_map(
            single_mode, QubitParams(t1_qubit=math.inf),
            detuning_grid=np.array([0.0]), time_grid=times,
        )
        t_zero = times[int(np.argmin(rmap.population[0]))]
        assert t_zero == pytest.approx(math.pi / (2 * g), abs=times[1] - times[0])

    def test_detuning_symmetry(self, single_mode):
        times = np.linspace(0, 2e-6, 51)
        delta = 2 * math.pi * 3e5
        rmap = rabi_map(
            single_mode, QubitParams(t1_qubit=math.inf),
            detuning_grid=np.array([-delta, delta]), time_grid=times,
        )
        assert np.max(np.abs(rmap.population[0] - rmap.population[1])) < 1e-8

    def test_engines_agree_on_map(self, single_mode):
        times = np.linspace(0, 1e-6, 11)
        detunings = 2 * math.pi * np.array([-2e5, 0.0, 2e5])
        amp = rabi_map(single_mode, QubitParams(t1_qubit=6e-6), detunings, times,
                       engine="amplitude")
        lind = rabi_map(single_mode, QubitParams(t1_qubit=6e-6), detunings, times,
                        engine="lindblad")
        assert np.max(np.abs(amp.population - lind.population)) < 1e-6

    def test_population_bounds_and_csv(self, discrete4):
        times = np.linspace(0, 1e-6, 6)
        detunings = 2 * math.pi * np.array([0.0, 5e5])
        rmap = rabi_map(discrete4, QubitParams(), detunings, times)
        assert np.all(rmap.population >= -1e-9)
        assert np.all(rmap.population <= 1 + 1e-9)
        lines = rabi_map_csv(rmap).strip().splitlines()
        assert lines[0].startswith(",0.0,")
        assert len(lines) == 3
        assert len(lines[1].split(",")) == len(times) + 1

    def test_chevron_and_satellite_anticrossing(self, discrete4, single_mode):
        # main chevron: deep population transfer at the m=0 resonance;
        # satellite: parked at the m=1 frequency, the four-mode system dips
        # far below what the m=0 mode alone could do there
        times = np.linspace(0, 2.5e-6, 126)
        splitting = discrete4.detunings[1]
        detunings = np.array([0.0, splitting])
        qubit = QubitParams(t1_qubit=6e-6)
        four = rabi_map(discrete4, qubit, detunings, times,
                        engine="lindblad", phonon_t1s=(20e-6,) * 4)
        one = rabi_map(single_mode, qubit, detunings, times,
                       engine="lindblad", phonon_t1s=(20e-6,))
        depth4 = four.population.min(axis=1)
        depth1 = one.population.min(axis=1)
        assert depth4[0] < 0.1
        assert depth4[1] < depth1[1] - 0.1

    def test_worker_pool_matches_serial(self, single_mode):
        times = np.linspace(0, 1e-6, 9)
        detunings = 2 * math.pi * np.array([-3e5, 0.0, 3e5, 6e5])
        serial = rabi_map(single_mode, QubitParams(), detunings, times, workers=1)
        parallel = rabi_map(single_mode, QubitParams(), detunings, times, workers=2)
        assert np.array_equal(serial.population, parallel.population)

    def test_rejects_unknown_engine(self, single_mode):
        with pytest.raises(ValueError):
            rabi_map(single_mode, QubitParams(), np.array([0.0]),
                     np.linspace(0, 1e-6, 5), engine="magic")
