"""Analytic mode structure of an HBAR and its piezoelectric coupling to a qubit.

The substrate's parallel faces form an acoustic Fabry-Perot supporting
longitudinal overtone modes. Two complementary bases are provided:

* ``Picture.DISCRETE`` - modes of the fictitious cylinder directly under the
  transducer disk (radius d/2), a few strongly coupled modes,
* ``Picture.SEMI_CONTINUUM`` - modes of a much larger cylinder (radius R),
  a dense set of lossless modes whose dephasing reproduces diffraction loss.

All frequencies and couplings are angular (rad/s). Conversion to Hz happens
only at the CLI / file boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.constants import hbar

__all__ = [
    "Picture",
    "ResonatorGeometry",
    "MaterialConstants",
    "PhononMode",
    "ModeBasis",
    "bessel_j0",
    "bessel_j0_root",
    "bessel_j1",
    "mode_frequency",
    "free_spectral_range",
    "mode_normalization",
    "coupling_strength",
    "build_basis",
    "basis_csv",
]


class Picture(enum.Enum):
    """Which cylindrical mode volume the transverse basis lives in."""

    DISCRETE = "discrete"
    SEMI_CONTINUUM = "semi-continuum"


@dataclass(frozen=True)
class ResonatorGeometry:
    """Substrate and transducer dimensions, in meters.

    ``aln_wavelength`` is the acoustic wavelength matched by the transducer;
    the disk is half a wavelength thick, so it equals twice the thickness.
    """

    substrate_thickness_h: float = 420e-6
    transducer_diameter_d: float = 200e-6
    transducer_thickness_t: float = 900e-9
    big_cylinder_radius_R: float = 2e-3

    def __post_init__(self):
        for name in (
            "substrate_thickness_h",
            "transducer_diameter_d",
            "transducer_thickness_t",
            "big_cylinder_radius_R",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.transducer_diameter_d / 2 < self.big_cylinder_radius_R:
            raise ValueError("transducer radius must be smaller than the big cylinder radius")
        if not self.transducer_thickness_t < 0.01 * self.substrate_thickness_h:
            raise ValueError("transducer must be much thinner than the substrate")

    @property
    def aln_wavelength(self) -> float:
        return 2.0 * self.transducer_thickness_t


@dataclass(frozen=True)
class MaterialConstants:
    """Sound velocities and piezoelectric drive constants.

    ``coupling_scale`` multiplies the product d33*c33*E0; 1.0 is the bare
    estimate, 0.85 reproduces the experimentally calibrated coupling.
    """

    v_longitudinal: float = 1.11e4      # m/s
    v_transverse_effective: float = 8.78e3  # m/s
    stiffness_c33: float = 390e9        # Pa
    piezo_d33: float = 1e-12            # m/V
    field_E0: float = 2.9e-2            # V/m
    coupling_scale: float = 1.0

    def __post_init__(self):
        for name in ("v_longitudinal", "v_transverse_effective", "stiffness_c33"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0 < self.coupling_scale <= 2:
            raise ValueError("coupling_scale must lie in (0, 2]")


@dataclass(frozen=True)
class PhononMode:
    """One (l, m) mode: frequency, qubit coupling and normalization.

    ``beta`` is the rms strain of a single phonon; ``basis_radius`` is where
    the transverse wavefunction has its first enforced zero.
    """

    l: int
    m: int
    omega: float          # rad/s
    g: float              # rad/s
    basis_radius: float   # m
    beta: float


@dataclass(frozen=True)
class ModeBasis:
    """Ordered transverse mode family at fixed longitudinal number l."""

    modes: tuple[PhononMode, ...]
    picture: Picture

    def __post_init__(self):
        if not self.modes:
            raise ValueError("basis must contain at least one mode")
        l0 = self.modes[0].l
        r0 = self.modes[0].basis_radius
        if any(mode.l != l0 or mode.basis_radius != r0 for mode in self.modes):
            raise ValueError("all modes in a basis must share l and basis_radius")

    def __len__(self) -> int:
        return len(self.modes)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([mode.omega for mode in self.modes])

    @property
    def couplings(self) -> np.ndarray:
        return np.array([mode.g for mode in self.modes])

    @property
    def detunings(self) -> np.ndarray:
        """Mode angular frequencies relative to the m=0 mode (rotating frame)."""
        w = self.omegas
        return w - w[0]


def bessel_j0(x: float) -> float:
    """Zeroth-order Bessel function of the first kind."""
    if not math.isfinite(x):
        raise ValueError("bessel_j0 requires finite input")
    return float(special.j0(x))


def bessel_j1(x: float) -> float:
    if not math.isfinite(x):
        raise ValueError("bessel_j1 requires finite input")
    return float(special.j1(x))


def bessel_j0_root(m: int) -> float:
    """The (m+1)-th positive root of J0; transverse mode index m=0 maps to
    the first root 2.404825..."""
    if m < 0:
        raise ValueError("mode index must be non-negative")
    return float(special.jn_zeros(0, m + 1)[-1])


def _transverse_wavenumber(m: int, radius: float) -> float:
    return bessel_j0_root(m) / radius


def mode_frequency(
    l: int,
    m: int,
    geom: ResonatorGeometry,
    mat: MaterialConstants,
    radius: float | None = None,
) -> float:
    """Angular frequency of the (l, m) mode of a flat cylindrical volume.

    Combines the longitudinal thickness resonance with the transverse
    Bessel cutoff through the effective-velocity dispersion:
    omega^2 = (l*pi/h)^2 v_l^2 + (j0m/radius)^2 v_t^2.

    ``radius`` defaults to the transducer radius d/2 (discrete picture);
    pass the big-cylinder radius for the semi-continuum picture.
    """
    if l < 1:
        raise ValueError("longitudinal mode number must be >= 1")
    if m < 0:
        raise ValueError("transverse mode number must be >= 0")
    if radius is None:
        radius = geom.transducer_diameter_d / 2
    if not radius > 0:
        raise ValueError("radius must be strictly positive")
    k_long = l * math.pi / geom.substrate_thickness_h
    k_trans = _transverse_wavenumber(m, radius)
    return math.sqrt(
        (k_long * mat.v_longitudinal) ** 2 + (k_trans * mat.v_transverse_effective) ** 2
    )


def free_spectral_range(geom: ResonatorGeometry, mat: MaterialConstants) -> float:
    """Longitudinal overtone spacing v_l / 2h, in Hz."""
    return mat.v_longitudinal / (2.0 * geom.substrate_thickness_h)


def _j0_squared_radial_integral(m: int, radius: float) -> float:
    """Closed form of int_0^radius J0(j0m r/radius)^2 r dr = radius^2 J1(j0m)^2 / 2."""
    j = bessel_j0_root(m)
    return radius**2 * bessel_j1(j) ** 2 / 2.0


def _j0_radial_integral(m: int, radius: float, upper: float) -> float:
    """Closed form of int_0^upper J0(j0m r/radius) r dr = upper*radius*J1(j0m upper/radius)/j0m."""
    j = bessel_j0_root(m)
    return upper * radius * bessel_j1(j * upper / radius) / j


def mode_normalization(
    l: int,
    m: int,
    geom: ResonatorGeometry,
    mat: MaterialConstants,
    radius: float | None = None,
) -> float:
    """Single-phonon rms strain amplitude.

    Normalized so that the total elastic energy of the mode,
    c33 * integral of the squared strain over the mode volume, equals
    hbar*omega. The radial integral therefore carries J0 squared.
    """
    if radius is None:
        radius = geom.transducer_diameter_d / 2
    w = mode_frequency(l, m, geom, mat, radius)
    h = geom.substrate_thickness_h
    return math.sqrt(
        hbar * w / (math.pi * h * mat.stiffness_c33 * _j0_squared_radial_integral(m, radius))
    )


def coupling_strength(
    l: int,
    m: int,
    geom: ResonatorGeometry,
    mat: MaterialConstants,
    radius: float | None = None,
) -> float:
    """Angular Jaynes-Cummings coupling of the qubit to the (l, m) mode.

    hbar*g = 2 c33 d33 E0 lambda_a beta * int_0^{d/2} J0(j0m r/radius) r dr,
    with the drive field uniform over the transducer disk. ``coupling_scale``
    from the material constants multiplies the result. g >= 0 for m = 0; for
    higher m in the semi-continuum the sign follows the overlap integral.
    """
    if radius is None:
        radius = geom.transducer_diameter_d / 2
    half_d = geom.transducer_diameter_d / 2
    if half_d > radius:
        raise ValueError("transducer radius must not exceed the basis radius")
    beta = mode_normalization(l, m, geom, mat, radius)
    integral = _j0_radial_integral(m, radius, half_d)
    hg = 2.0 * mat.stiffness_c33 * mat.piezo_d33 * mat.field_E0 * geom.aln_wavelength
    return mat.coupling_scale * hg * beta * integral / hbar


def build_basis(
    l: int,
    picture: Picture,
    mode_count: int,
    geom: ResonatorGeometry,
    mat: MaterialConstants,
) -> ModeBasis:
    """Assemble the first ``mode_count`` transverse modes at fixed l.

    Rejects mode counts whose transverse term would exceed the longitudinal
    one in the dispersion relation (the effective-velocity form is no longer
    trustworthy there).
    """
    if mode_count < 1:
        raise ValueError("mode_count must be >= 1")
    if picture is Picture.DISCRETE:
        radius = geom.transducer_diameter_d / 2
    else:
        radius = geom.big_cylinder_radius_R
    k_long_term = (l * math.pi / geom.substrate_thickness_h) * mat.v_longitudinal
    k_trans_term = _transverse_wavenumber(mode_count - 1, radius) * mat.v_transverse_effective
    if k_trans_term > k_long_term:
        raise ValueError(
            f"mode_count={mode_count} leaves the paraxial regime: transverse term "
            f"{k_trans_term:.3e} rad/s exceeds longitudinal term {k_long_term:.3e} rad/s"
        )
    modes = tuple(
        PhononMode(
            l=l,
            m=m,
            omega=mode_frequency(l, m, geom, mat, radius),
            g=coupling_strength(l, m, geom, mat, radius),
            basis_radius=radius,
            beta=mode_normalization(l, m, geom, mat, radius),
        )
        for m in range(mode_count)
    )
    return ModeBasis(modes=modes, picture=picture)


def basis_csv(basis: ModeBasis) -> str:
    """Render a basis in the repo-wide CSV format (frequencies in Hz)."""
    lines = ["l,m,omega_hz,g_hz,beta,basis_radius_m"]
    for mode in basis.modes:
        lines.append(
            f"{mode.l},{mode.m},{mode.omega / (2 * math.pi):.11e},"
            f"{mode.g / (2 * math.pi):.11e},{mode.beta!r},{mode.basis_radius!r}"
        )
    return "\n".join(lines) + "\n"
