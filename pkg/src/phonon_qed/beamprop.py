"""Fourier (angular-spectrum) acoustic beam propagation for the real geometry.

One roundtrip through the substrate is: FFT to the transverse wavevector
domain, multiply by exp(i k_z 2h) with k_z from the effective-velocity
dispersion, inverse FFT, then apply the AlN phase mask (the protruding disk
adds path) and a super-Gaussian absorbing boundary standing in for the lossy
sides of the real substrate.

Sweeping the drive frequency and accumulating the complex sum of roundtrip
fields makes resonances build up interferometrically; re-propagating the
accumulated sum converges, Fox-Li style, onto the standing-wave mode profile.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.signal import find_peaks

from .core import MaterialConstants, ResonatorGeometry
from .dynamics import NumericalError

__all__ = [
    "BeamGrid",
    "AcousticField",
    "PropagatorConfig",
    "ResonanceSpectrum",
    "initial_field",
    "roundtrip",
    "frequency_sweep",
    "converge_mode",
    "spectrum_csv",
    "peaks_csv",
    "mode_binary_bytes",
    "write_mode_binary",
    "read_mode_binary",
]

MODE_MAGIC = b"PHQMODE1"
MODE_HEADER = struct.Struct("<8sII d 8x")  # magic, nx, ny, dx, reserved; 32 bytes


@dataclass(frozen=True)
class BeamGrid:
    """Square transverse grid: nx x ny points over a physical side ``extent``."""

    nx: int = 1024
    ny: int = 1024
    extent: float = 1.2e-3  # m

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 8 or n & (n - 1):
                raise ValueError("grid sizes must be powers of two, at least 8")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    @property
    def dx(self) -> float:
        return self.extent / self.nx

    def coordinates(self):
        x = (np.arange(self.nx) - self.nx // 2) * self.dx
        y = (np.arange(self.ny) - self.ny // 2) * self.dx
        return np.meshgrid(x, y, indexing="ij")

    def wavevectors(self):
        kx = 2 * np.pi * sfft.fftfreq(self.nx, self.dx)
        ky = 2 * np.pi * sfft.fftfreq(self.ny, self.dx)
        return np.meshgrid(kx, ky, indexing="ij")


@dataclass(frozen=True)
class AcousticField:
    """Complex scalar field sampled on a transverse grid at one frequency."""

    grid: BeamGrid
    values: np.ndarray
    frequency: float   # rad/s

    def __post_init__(self):
        if self.values.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("field shape does not match grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx**2)


@dataclass(frozen=True)
class PropagatorConfig:
    """Geometry, velocities and masks for a roundtrip propagator.

    ``mat_substrate`` carries the beam-propagation sound velocities of the
    substrate (these differ from the effective velocities of the analytic
    mode model). The absorber occupies the outer annulus of the grid,
    starting ``absorber_width`` in from the half-extent.
    """

    geom: ResonatorGeometry
    mat_substrate: MaterialConstants
    v_aln_longitudinal: float = 11008.0
    absorber_width: float = 1e-4
    absorber_strength: float = 8.0
    roundtrips: int = 24
    aln_enabled: bool = True
    disk_center_px: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if not self.v_aln_longitudinal > 0:
            raise ValueError("AlN sound velocity must be positive")
        if self.absorber_width < 0 or self.absorber_strength < 0:
            raise ValueError("absorber parameters cannot be negative")
        if self.roundtrips < 16:
            raise ValueError("need at least 16 roundtrips per accumulation")

    def validate_grid(self, grid: BeamGrid, max_frequency_hz: float) -> None:
        """Reject grids that cannot sample this propagation faithfully.

        Checks that the grid spans at least twice the transducer disk and
        that the roundtrip spectral phase exp(i k_z 2h) is sampled without
        aliasing (adjacent k-space bins differ by < pi at the grid edge)
        up to the highest swept frequency.
        """
        if self.absorber_width >= grid.extent / 4:
            raise ValueError("absorber_width must be below a quarter of the extent")
        if grid.extent < 2 * self.geom.transducer_diameter_d:
            raise ValueError("grid extent must cover twice the transducer diameter")
        omega = 2 * math.pi * max_frequency_hz
        vt = self.mat_substrate.v_transverse_effective
        vl = self.mat_substrate.v_longitudinal
        twoh = 2 * self.geom.substrate_thickness_h
        k_edge = math.pi / grid.dx
        dk = 2 * math.pi / grid.extent
        if omega <= vt * k_edge:
            # grid edge already evanescent: check the steepest propagating
            # region just inside the cutoff circle instead
            k_edge = 0.999 * omega / vt
        kz = math.sqrt(max(omega**2 - vt**2 * k_edge**2, 0.0)) / vl
        # |dphi/dk_t| = 2h vt^2 k_t / (vl^2 kz) for phi = 2h kz(k_t)
        dphase = (twoh * vt**2 * k_edge / (vl**2 * max(kz, 1e-300))) * dk
        if dphase >= math.pi:
            raise ValueError(
                "grid spacing too coarse: roundtrip phase aliases at the band edge "
                f"(sample-to-sample increment {dphase:.2f} rad)"
            )


@dataclass(frozen=True)
class ResonanceSpectrum:
    freq_axis: np.ndarray       # Hz
    intensity: np.ndarray
    peaks: tuple[tuple[float, float], ...]   # (frequency Hz, prominence)


class _GridArrays:
    """Frequency-independent arrays shared by all sweep points."""

    def __init__(self, cfg: PropagatorConfig, grid: BeamGrid):
        KX, KY = grid.wavevectors()
        self.kt2 = KX**2 + KY**2
        X, Y = grid.coordinates()
        cx = cfg.disk_center_px[0] * grid.dx
        cy = cfg.disk_center_px[1] * grid.dx
        r_disk = np.hypot(X - cx, Y - cy)
        self.disk = r_disk <= cfg.geom.transducer_diameter_d / 2
        if cfg.absorber_strength > 0 and cfg.absorber_width > 0:
            r = np.hypot(X, Y)
            r_start = grid.extent / 2 - cfg.absorber_width
            ramp = np.clip((r - r_start) / cfg.absorber_width, 0.0, None)
            self.absorber = np.exp(-cfg.absorber_strength * ramp**4)
        else:
            self.absorber = None


class _Propagator:
    """Precomputed masks for repeated roundtrips at one frequency."""

    def __init__(self, cfg: PropagatorConfig, grid: BeamGrid, frequency: float,
                 shared: _GridArrays | None = None):
        self.cfg = cfg
        self.grid = grid
        self.frequency = frequency
        omega = frequency
        vt = cfg.mat_substrate.v_transverse_effective
        vl = cfg.mat_substrate.v_longitudinal
        twoh = 2 * cfg.geom.substrate_thickness_h

        if shared is None:
            shared = _GridArrays(cfg, grid)
        self.disk = shared.disk
        self.absorber = shared.absorber

        kz2 = omega**2 - vt**2 * shared.kt2
        propagating = kz2 >= 0
        root = np.sqrt(np.abs(kz2)) / vl
        # single complex exp: i*root*2h on propagating bins, -root*2h off them
        exponent = np.where(propagating, 1j * root * twoh, -root * twoh + 0j)
        self.kspace_phase = np.exp(exponent)

        if cfg.aln_enabled:
            aln_phase = 2 * cfg.geom.transducer_thickness_t * omega / cfg.v_aln_longitudinal
            self.real_mask = np.where(self.disk, np.exp(1j * aln_phase), 1.0 + 0j)
        else:
            self.real_mask = None

    def roundtrip_values(self, values: np.ndarray, fft_workers: int = 1) -> np.ndarray:
        spectrum = sfft.fft2(values, workers=fft_workers)
        out = sfft.ifft2(spectrum * self.kspace_phase, workers=fft_workers)
        if self.real_mask is not None:
            out = out * self.real_mask
        if self.absorber is not None:
            out = out * self.absorber
        return out

    def accumulate(self, values: np.ndarray, roundtrips: int, fft_workers: int = 1):
        acc = np.zeros_like(values)
        field = values
        for _ in range(roundtrips):
            field = self.roundtrip_values(field, fft_workers)
            acc += field
        return acc


@functools.lru_cache(maxsize=2)
def _propagator(cfg: PropagatorConfig, grid: BeamGrid, frequency: float) -> _Propagator:
    return _Propagator(cfg, grid, frequency)


def initial_field(cfg: PropagatorConfig, grid: BeamGrid, frequency: float) -> AcousticField:
    """Unit-amplitude disk matching the transducer, zero elsewhere.

    The piezoelectric drive is uniform over the AlN, so this is the source
    profile injected at the z=0 face. ``frequency`` is angular (rad/s).
    """
    if cfg.geom.transducer_diameter_d / grid.dx < 8:
        raise ValueError("transducer disk resolved by fewer than 8 grid points")
    prop = _propagator(cfg, grid, frequency)
    values = np.where(prop.disk, 1.0 + 0j, 0.0 + 0j)
    return AcousticField(grid=grid, values=values, frequency=frequency)


def roundtrip(field: AcousticField, cfg: PropagatorConfig, fft_workers: int = 1) -> AcousticField:
    """Propagate one 2h roundtrip: spectral phase, AlN mask, absorber."""
    prop = _propagator(cfg, field.grid, field.frequency)
    values = prop.roundtrip_values(field.values, fft_workers)
    return AcousticField(grid=field.grid, values=values, frequency=field.frequency)


def _sweep_chunk(args) -> list[float]:
    cfg, grid, freqs_hz, fft_workers = args
    shared = _GridArrays(cfg, grid)
    source = np.where(shared.disk, 1.0 + 0j, 0.0 + 0j)
    out = []
    for freq_hz in freqs_hz:
        omega = 2 * math.pi * freq_hz
        prop = _Propagator(cfg, grid, omega, shared=shared)
        acc = prop.accumulate(source, cfg.roundtrips, fft_workers)
        out.append(float(np.sum(np.abs(acc) ** 2) * grid.dx**2))
    return out


def frequency_sweep(
    cfg: PropagatorConfig,
    grid: BeamGrid,
    freq_axis: np.ndarray,
    workers: int = 1,
    prominence_fraction: float = 0.05,
) -> ResonanceSpectrum:
    """Integrated intensity of the accumulated roundtrip sum per frequency.

    Frequencies (Hz) are independent jobs; results are gathered in axis
    order. Peaks are local maxima with prominence at least
    ``prominence_fraction`` of the window maximum.
    """
    freqs = np.asarray(freq_axis, dtype=float)
    if freqs.size == 0:
        raise ValueError("frequency axis must be non-empty")
    cfg.validate_grid(grid, float(freqs.max()))
    if cfg.geom.transducer_diameter_d / grid.dx < 8:
        raise ValueError("transducer disk resolved by fewer than 8 grid points")

    if workers > 1:
        import concurrent.futures

        # interleaved chunks keep all workers busy to the end while the
        # gather order stays deterministic
        chunks = [freqs[i::workers] for i in range(workers)]
        jobs = [(cfg, grid, chunk, 1) for chunk in chunks]
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_chunk, jobs))
        intensity = np.empty(freqs.size)
        for i, res in enumerate(results):
            intensity[i::workers] = res
    else:
        intensity = np.array(_sweep_chunk((cfg, grid, freqs, 1)))

    if intensity.max() > 0:
        idx, props = find_peaks(intensity, prominence=prominence_fraction * intensity.max())
        peaks = tuple(
            (float(freqs[i]), float(p)) for i, p in zip(idx, props["prominences"])
        )
    else:
        peaks = ()
    return ResonanceSpectrum(freq_axis=freqs, intensity=intensity, peaks=peaks)


def converge_mode(
    cfg: PropagatorConfig,
    grid: BeamGrid,
    resonance_frequency: float,
    tol: float = 1e-6,
    max_iterations: int = 50,
    fft_workers: int = 1,
) -> AcousticField:
    """Iterate accumulated roundtrip sums to the standing-wave mode profile.

    Each outer iteration feeds the normalized complex sum back in as the
    source (power iteration on the accumulation operator). Converges when
    the phase-aligned relative L2 change drops below ``tol``; raises
    ``NumericalError`` otherwise. ``resonance_frequency`` is in Hz.
    """
    omega = 2 * math.pi * resonance_frequency
    cfg.validate_grid(grid, resonance_frequency)
    prop = _Propagator(cfg, grid, omega)
    current = np.where(prop.disk, 1.0 + 0j, 0.0 + 0j)
    current = current / math.sqrt(np.sum(np.abs(current) ** 2))
    residual = math.inf
    for _ in range(max_iterations):
        acc = prop.accumulate(current, cfg.roundtrips, fft_workers)
        norm = math.sqrt(np.sum(np.abs(acc) ** 2))
        if norm == 0:
            raise NumericalError("accumulated field vanished; not at a resonance")
        acc = acc / norm
        overlap = np.vdot(current, acc)
        if abs(overlap) > 0:
            acc = acc * (overlap.conjugate() / abs(overlap))
        residual = float(np.linalg.norm(acc - current) / np.linalg.norm(current))
        current = acc
        if residual < tol:
            return AcousticField(grid=grid, values=current, frequency=omega)
    raise NumericalError(
        f"mode iteration did not converge in {max_iterations} iterations "
        f"(last residual {residual:.3e})"
    )


def spectrum_csv(spectrum: ResonanceSpectrum) -> str:
    lines = ["freq_hz,intensity"]
    for f, inten in zip(spectrum.freq_axis, spectrum.intensity):
        lines.append(f"{float(f)!r},{float(inten)!r}")
    return "\n".join(lines) + "\n"


def peaks_csv(spectrum: ResonanceSpectrum) -> str:
    lines = ["freq_hz,prominence"]
    for f, p in spectrum.peaks:
        lines.append(f"{f!r},{p!r}")
    return "\n".join(lines) + "\n"


def mode_binary_bytes(field: AcousticField) -> bytes:
    """Mode profile encoding: 32-byte header then row-major complex64 pairs.

    Header layout (little endian): 8-byte magic ``PHQMODE1``, uint32 nx,
    uint32 ny, float64 dx in meters, 8 reserved zero bytes. Body: nx*ny
    elements, each a float32 (real, imag) pair, row-major.
    """
    header = MODE_HEADER.pack(MODE_MAGIC, field.grid.nx, field.grid.ny, field.grid.dx)
    body = field.values.astype(np.complex64).tobytes(order="C")
    return header + body


def write_mode_binary(field: AcousticField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(mode_binary_bytes(field))


def read_mode_binary(path) -> tuple[np.ndarray, float]:
    """Read a mode profile file; returns (complex64 array, dx)."""
    with open(path, "rb") as fh:
        raw = fh.read(MODE_HEADER.size)
        magic, nx, ny, dx = MODE_HEADER.unpack(raw)
        if magic != MODE_MAGIC:
            raise ValueError(f"not a mode profile file (magic {magic!r})")
        body = np.frombuffer(fh.read(), dtype=np.complex64)
    if body.size != nx * ny:
        raise ValueError("mode profile file truncated")
    return body.reshape(nx, ny), dx
