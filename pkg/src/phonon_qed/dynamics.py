"""Time evolution of the coupled qubit / multimode-phonon system.

Two engines cover the two bases:

* ``lindblad_evolve`` - density-matrix master equation on the truncated
  Fock product space, with amplitude-damping channels for the qubit and
  each phonon mode. Practical for a few modes.
* ``amplitude_evolve`` - single-excitation amplitude equations of motion,
  linear in the mode count, for the dense lossless semi-continuum.

Both work in the frame rotating at the m=0 mode frequency, so mode
detunings are omega_m - omega_0 and the qubit detuning delta_q is measured
from the m=0 mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import ModeBasis

__all__ = [
    "QubitParams",
    "LindbladConfig",
    "InitialProductState",
    "AmplitudeState",
    "AmplitudeTrajectory",
    "LindbladTrajectory",
    "RabiMap",
    "NumericalError",
    "build_hamiltonian",
    "amplitude_evolve",
    "lindblad_evolve",
    "rabi_map",
    "rabi_map_csv",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_DIMENSION_CAP = 1024


class NumericalError(RuntimeError):
    """An integrator or solver failed to produce a trustworthy result."""


@dataclass(frozen=True)
class QubitParams:
    """Qubit lifetime and detuning from the m=0 phonon mode.

    The amplitude decay rate is gamma_q = 1/(2 T1) so that the excited
    population decays as exp(-t/T1). ``t1_qubit=math.inf`` switches decay off.
    """

    t1_qubit: float = 6e-6           # s
    detuning_delta_q: float = 0.0    # rad/s

    def __post_init__(self):
        if not self.t1_qubit > 0:
            raise ValueError("t1_qubit must be positive (use math.inf for lossless)")

    @property
    def gamma_q(self) -> float:
        return 0.0 if math.isinf(self.t1_qubit) else 1.0 / (2.0 * self.t1_qubit)


@dataclass(frozen=True)
class LindbladConfig:
    """Inputs for the master-equation engine."""

    basis: ModeBasis
    qubit: QubitParams
    phonon_t1s: tuple[float, ...]
    fock_truncation: int = 2
    time_grid: tuple[float, ...] = ()
    dimension_cap: int = DEFAULT_DIMENSION_CAP

    def __post_init__(self):
        if len(self.phonon_t1s) != len(self.basis):
            raise ValueError("need one phonon T1 per mode")
        if any(t <= 0 for t in self.phonon_t1s):
            raise ValueError("phonon lifetimes must be positive (math.inf for lossless)")
        if self.fock_truncation < 2:
            raise ValueError("fock_truncation must be >= 2")


@dataclass(frozen=True)
class InitialProductState:
    """Product state: qubit ground/excited, a Fock occupation per mode."""

    qubit_excited: bool = True
    mode_occupations: tuple[int, ...] = ()


@dataclass(frozen=True)
class AmplitudeState:
    """Amplitudes (c_q, {c_m}) of the single-excitation manifold."""

    c_q: complex
    c_modes: tuple[complex, ...]
    time: float = 0.0

    @property
    def qubit_population(self) -> float:
        return abs(self.c_q) ** 2

    @property
    def norm_squared(self) -> float:
        return abs(self.c_q) ** 2 + sum(abs(c) ** 2 for c in self.c_modes)


@dataclass(frozen=True)
class AmplitudeTrajectory:
    times: np.ndarray
    c_q: np.ndarray          # complex, shape (T,)
    c_modes: np.ndarray      # complex, shape (T, M)

    @property
    def qubit_population(self) -> np.ndarray:
        return np.abs(self.c_q) ** 2

    @property
    def mode_populations(self) -> np.ndarray:
        return np.abs(self.c_modes) ** 2

    def final_state(self) -> AmplitudeState:
        return AmplitudeState(
            c_q=complex(self.c_q[-1]),
            c_modes=tuple(complex(c) for c in self.c_modes[-1]),
            time=float(self.times[-1]),
        )


@dataclass(frozen=True)
class LindbladTrajectory:
    times: np.ndarray
    qubit_population: np.ndarray
    mode_populations: np.ndarray    # shape (T, M)
    trace: np.ndarray


@dataclass(frozen=True)
class RabiMap:
    """Qubit excited population over a (detuning, time) grid."""

    detuning_axis: np.ndarray   # rad/s
    time_axis: np.ndarray       # s
    population: np.ndarray      # shape (len(detuning_axis), len(time_axis))

    def __post_init__(self):
        if self.population.shape != (self.detuning_axis.size, self.time_axis.size):
            raise ValueError("population shape must be (detunings, times)")
        if self.population.min() < -1e-6 or self.population.max() > 1 + 1e-6:
            raise ValueError("populations must lie in [0, 1]")


def build_hamiltonian(
    basis: ModeBasis,
    delta_q: float,
    fock_truncation: int | None = None,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
) -> np.ndarray:
    """Multimode Jaynes-Cummings Hamiltonian in the rotating frame.

    With ``fock_truncation=None`` returns the single-excitation block on the
    basis {|e, vac>, |g, 1_m>}, an (M+1) x (M+1) Hermitian matrix. Otherwise
    returns the dense Hamiltonian on the full truncated product space
    (qubit tensor modes); its dimension 2 * n^M is capped.
    """
    M = len(basis)
    det = basis.detunings
    g = basis.couplings
    if fock_truncation is None:
        H = np.zeros((M + 1, M + 1), dtype=complex)
        H[0, 0] = delta_q
        H[0, 1:] = g
        H[1:, 0] = g
        H[np.arange(1, M + 1), np.arange(1, M + 1)] = det
        return H
    if fock_truncation < 2:
        raise ValueError("fock_truncation must be >= 2")
    if fock_truncation ** (M + 1) > dimension_cap:
        raise ValueError(
            f"Hilbert space dimension {fock_truncation ** (M + 1)} exceeds the cap "
            f"{dimension_cap}; raise dimension_cap explicitly if this is intentional"
        )
    lower_q, lowers = _product_space_operators(M, fock_truncation)
    H = delta_q * (lower_q.conj().T @ lower_q)
    for m in range(M):
        b = lowers[m]
        H = H + det[m] * (b.conj().T @ b)
        H = H + g[m] * (lower_q.conj().T @ b + lower_q @ b.conj().T)
    return H


def _product_space_operators(M: int, n_fock: int):
    """Lowering operators (qubit, each mode) on the dense product space."""
    sigma_minus = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    b_single = np.diag(np.sqrt(np.arange(1, n_fock)), 1).astype(complex)
    eye_q = np.eye(2, dtype=complex)
    eye_b = np.eye(n_fock, dtype=complex)

    def embed(ops):
        out = ops[0]
        for op in ops[1:]:
            out = np.kron(out, op)
        return out

    lower_q = embed([sigma_minus] + [eye_b] * M)
    lowers = []
    for m in range(M):
        ops = [eye_q] + [eye_b] * M
        ops[1 + m] = b_single
        lowers.append(embed(ops))
    return lower_q, lowers


def _solve(rhs, y0, t_span, t_eval, rtol, atol, max_step):
    sol = integrate.solve_ivp(
        rhs,
        t_span,
        y0,
        method="DOP853",
        t_eval=t_eval,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    if not sol.success:
        raise NumericalError(f"integrator failed: {sol.message}")
    return sol


def amplitude_evolve(
    basis: ModeBasis,
    qubit: QubitParams,
    initial: AmplitudeState | None = None,
    duration: float = 0.0,
    dt_max: float | None = None,
    t_eval: np.ndarray | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> AmplitudeTrajectory:
    """Integrate the single-excitation amplitude equations of motion.

    dc_q/dt = (-gamma_q + i delta_q) c_q + sum_m i g_m c_m
    dc_m/dt = i g_m c_q + i delta_m c_m

    The phonon modes are lossless; only the qubit amplitude decays.
    ``initial`` defaults to the qubit excited and all modes empty.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    M = len(basis)
    if initial is None:
        initial = AmplitudeState(c_q=1.0 + 0.0j, c_modes=(0.0 + 0.0j,) * M)
    if len(initial.c_modes) != M:
        raise ValueError("initial state size does not match the basis")

    A = np.zeros((M + 1, M + 1), dtype=complex)
    A[0, 0] = -qubit.gamma_q + 1j * qubit.detuning_delta_q
    A[0, 1:] = 1j * basis.couplings
    A[1:, 0] = 1j * basis.couplings
    A[np.arange(1, M + 1), np.arange(1, M + 1)] = 1j * basis.detunings

    y0 = np.empty(M + 1, dtype=complex)
    y0[0] = initial.c_q
    y0[1:] = initial.c_modes

    if t_eval is None:
        t_eval = np.array([0.0, duration])
    sol = _solve(
        lambda t, y: A @ y,
        y0,
        (0.0, duration),
        t_eval,
        rtol,
        atol,
        dt_max if dt_max else np.inf,
    )
    y = sol.y.T
    return AmplitudeTrajectory(
        times=sol.t + initial.time, c_q=y[:, 0], c_modes=y[:, 1:]
    )


def lindblad_evolve(
    cfg: LindbladConfig,
    initial: InitialProductState | None = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    positivity_tol: float = 1e-8,
) -> LindbladTrajectory:
    """Integrate the Lindblad master equation with amplitude-damping channels.

    Collapse operators are sqrt(1/T1_q) * sigma_minus for the qubit and
    sqrt(1/T1_m) * b_m per phonon mode, so populations decay as exp(-t/T1).
    Raises ``NumericalError`` if the density matrix develops negative
    eigenvalues beyond ``positivity_tol`` at any reported time.
    """
    basis = cfg.basis
    M = len(basis)
    n = cfg.fock_truncation
    if n ** (M + 1) > cfg.dimension_cap:
        raise ValueError(
            f"product space {n ** (M + 1)} exceeds dimension cap {cfg.dimension_cap}"
        )
    times = np.asarray(cfg.time_grid, dtype=float)
    if times.size < 2:
        raise ValueError("time_grid needs at least two points")

    if initial is None:
        initial = InitialProductState(
            qubit_excited=True, mode_occupations=(0,) * M
        )
    occupations = initial.mode_occupations or (0,) * M
    if len(occupations) != M:
        raise ValueError("need one occupation number per mode")
    if any(not 0 <= k < n for k in occupations):
        raise ValueError("initial occupation outside the Fock truncation")

    lower_q, lowers = _product_space_operators(M, n)
    H = build_hamiltonian(
        basis, cfg.qubit.detuning_delta_q, fock_truncation=n,
        dimension_cap=cfg.dimension_cap,
    )

    collapse = []
    if not math.isinf(cfg.qubit.t1_qubit):
        collapse.append(math.sqrt(1.0 / cfg.qubit.t1_qubit) * lower_q)
    for m, t1 in enumerate(cfg.phonon_t1s):
        if not math.isinf(t1):
            collapse.append(math.sqrt(1.0 / t1) * lowers[m])
    # Precompute L, L†L pairs once; the RHS runs in the integrator hot loop.
    collapse_pairs = [(L, L.conj().T @ L) for L in collapse]

    dim = 2 * n**M
    index = 1 if initial.qubit_excited else 0
    for m in range(M):
        index = index * n + occupations[m]
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    rho0 = np.outer(psi, psi.conj())

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        drho = -1j * (H @ rho - rho @ H)
        for L, LdL in collapse_pairs:
            drho += L @ rho @ L.conj().T - 0.5 * (LdL @ rho + rho @ LdL)
        return drho.ravel()

    sol = _solve(rhs, rho0.ravel(), (times[0], times[-1]), times, rtol, atol, np.inf)

    n_q = lower_q.conj().T @ lower_q
    n_modes = [b.conj().T @ b for b in lowers]
    qubit_pop = np.empty(times.size)
    mode_pop = np.empty((times.size, M))
    trace = np.empty(times.size)
    for i in range(times.size):
        rho = sol.y[:, i].reshape(dim, dim)
        eigvals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
        if eigvals.min() < -positivity_tol:
            raise NumericalError(
                f"density matrix lost positivity at t={times[i]:.3e} s "
                f"(min eigenvalue {eigvals.min():.3e})"
            )
        qubit_pop[i] = np.real(np.trace(n_q @ rho))
        for m in range(M):
            mode_pop[i, m] = np.real(np.trace(n_modes[m] @ rho))
        trace[i] = np.real(np.trace(rho))
    return LindbladTrajectory(
        times=times, qubit_population=qubit_pop, mode_populations=mode_pop, trace=trace
    )


def _rabi_column(args):
    basis, qubit_t1, delta_q, time_axis, engine, phonon_t1s, fock = args
    qubit = QubitParams(t1_qubit=qubit_t1, detuning_delta_q=delta_q)
    times = np.asarray(time_axis, dtype=float)
    if engine == "amplitude":
        # t=0 must be present for solve_ivp output; population there is 1.
        traj = amplitude_evolve(
            basis, qubit, duration=float(times[-1]),
            t_eval=np.concatenate(([0.0], times)) if times[0] > 0 else times,
        )
        pop = traj.qubit_population
        return pop[1:] if times[0] > 0 else pop
    cfg = LindbladConfig(
        basis=basis,
        qubit=qubit,
        phonon_t1s=phonon_t1s,
        fock_truncation=fock,
        time_grid=tuple(times) if times[0] == 0 else (0.0, *times),
    )
    traj = lindblad_evolve(cfg)
    return traj.qubit_population if times[0] == 0 else traj.qubit_population[1:]


def rabi_map(
    basis: ModeBasis,
    qubit: QubitParams,
    detuning_grid: np.ndarray,
    time_grid: np.ndarray,
    engine: str = "amplitude",
    phonon_t1s: tuple[float, ...] | None = None,
    fock_truncation: int = 2,
    workers: int = 1,
) -> RabiMap:
    """Qubit excited population versus (detuning, interaction time).

    Columns (one per detuning) are independent; ``workers > 1`` distributes
    them over processes with results gathered in grid order.
    """
    detunings = np.asarray(detuning_grid, dtype=float)
    times = np.asarray(time_grid, dtype=float)
    if detunings.size == 0 or times.size == 0:
        raise ValueError("detuning and time grids must be non-empty")
    if engine not in ("amplitude", "lindblad"):
        raise ValueError(f"unknown engine {engine!r}")
    if phonon_t1s is None:
        phonon_t1s = (math.inf,) * len(basis)

    jobs = [
        (basis, qubit.t1_qubit, dq, times, engine, phonon_t1s, fock_truncation)
        for dq in detunings
    ]
    if workers > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_rabi_column, jobs))
    else:
        rows = [_rabi_column(job) for job in jobs]
    return RabiMap(
        detuning_axis=detunings, time_axis=times, population=np.vstack(rows)
    )


def rabi_map_csv(rmap: RabiMap) -> str:
    """Matrix CSV: first row time axis (s), first column detuning (Hz)."""
    header = "," + ",".join(repr(float(t)) for t in rmap.time_axis)
    lines = [header]
    for dq, row in zip(rmap.detuning_axis, rmap.population):
        cells = ",".join(f"{p:.8e}" for p in row)
        lines.append(f"{float(dq) / (2 * math.pi)!r},{cells}")
    return "\n".join(lines) + "\n"
