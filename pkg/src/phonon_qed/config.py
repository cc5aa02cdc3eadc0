"""Run configuration: INI-style sections defaulting to the published device.

Every key has a default equal to the published device values, so an empty
config reproduces that system as-is. Unknown sections or keys are rejected
at parse time. All file-facing frequencies are plain Hz; lengths and times
are SI (meters, seconds) written in scientific notation.
"""

from __future__ import annotations

import configparser
import copy
import io
import math
from typing import Any

from .core import MaterialConstants, Picture, ResonatorGeometry
from .dynamics import QubitParams

__all__ = ["ConfigError", "RunConfig", "PRESETS", "DEFAULTS"]


class ConfigError(ValueError):
    """Bad configuration file, key, or value."""


# section -> key -> (default, type, help). Types: float, int, bool, str.
DEFAULTS: dict[str, dict[str, tuple[Any, type, str]]] = {
    "geometry": {
        "substrate_thickness_h": (420e-6, float, "substrate thickness, m"),
        "transducer_diameter_d": (200e-6, float, "AlN disk diameter, m"),
        "transducer_thickness_t": (900e-9, float, "AlN disk thickness, m"),
        "big_cylinder_radius_r": (2e-3, float, "semi-continuum cylinder radius, m"),
    },
    "materials": {
        "v_longitudinal": (1.11e4, float, "longitudinal sound velocity, m/s"),
        "v_transverse_effective": (8.78e3, float, "effective transverse velocity, m/s"),
        "stiffness_c33": (390e9, float, "stiffness tensor component, Pa"),
        "piezo_d33": (1e-12, float, "piezoelectric tensor component, m/V"),
        "field_e0": (2.9e-2, float, "drive field in the transducer, V/m"),
        "coupling_scale": (1.0, float, "overall coupling scale factor"),
    },
    "qubit": {
        "t1": (6e-6, float, "qubit energy relaxation time, s (inf = lossless)"),
        "detuning_hz": (0.0, float, "qubit detuning from the m=0 mode, Hz"),
    },
    "basis": {
        "l": (503, int, "longitudinal mode number"),
        "picture": ("discrete", str, "discrete | semi-continuum"),
        "mode_count": (4, int, "number of transverse modes"),
    },
    "dynamics": {
        "engine": ("amplitude", str, "amplitude | lindblad"),
        "fock_truncation": (2, int, "Fock levels per mode (lindblad engine)"),
        "phonon_t1_default": (20e-6, float,
                              "per-mode lifetime, s (lindblad engine; unanchored default)"),
        "detuning_min_hz": (-2e6, float, "rabi-map detuning axis start, Hz"),
        "detuning_max_hz": (2e6, float, "rabi-map detuning axis stop, Hz"),
        "detuning_points": (41, int, "rabi-map detuning axis points"),
        "time_max": (2e-6, float, "rabi-map time axis stop, s"),
        "time_points": (101, int, "rabi-map time axis points"),
    },
    "protocols": {
        "artificial_detuning_hz": (200e3, float, "Ramsey artificial detuning, Hz"),
        "storage_detuning_hz": (3e6, float, "qubit-phonon detuning during storage, Hz"),
        "tau_max": (15e-6, float, "coherence delay axis stop, s"),
        "tau_points": (901, int, "coherence delay axis points"),
        "full_sequence": (False, bool, "simulate swap-delay-swap instead of |eta|^2"),
        "include_second_swap_decay": (False, bool, "qubit decay during the retrieval swap"),
        "swap_rise_time": (0.0, float, "detuning ramp time of the swap pulse, s"),
        "sweep_delay_max": (20e-6, float, "t1-sweep delay axis stop, s"),
        "sweep_delay_points": (41, int, "t1-sweep delay axis points"),
    },
    "beamprop": {
        "grid_nx": (1024, int, "transverse grid size (power of two)"),
        "extent": (1.2e-3, float, "physical grid side length, m"),
        "v_l_substrate": (11110.0, float, "substrate longitudinal velocity, m/s"),
        "v_t_substrate": (6056.0, float, "substrate transverse velocity, m/s"),
        "v_aln_longitudinal": (11008.0, float, "AlN longitudinal velocity, m/s"),
        "absorber_width": (1e-4, float, "absorbing annulus width, m"),
        "absorber_strength": (8.0, float, "absorber super-Gaussian strength"),
        "roundtrips": (24, int, "roundtrips per accumulation"),
        "aln_enabled": (True, bool, "apply the AlN phase mask"),
        "sweep_l": (503, int, "longitudinal number the sweep window centers on"),
        "sweep_start_offset_hz": (-0.5e6, float, "sweep start relative to l*FSR, Hz"),
        "sweep_stop_offset_hz": (3.0e6, float, "sweep stop relative to l*FSR, Hz"),
        "sweep_points_per_fsr": (400, int, "sweep resolution, points per FSR"),
    },
    "io": {
        "out_dir": (".", str, "output directory"),
    },
}

PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "paper-l503": {},
    "paper-l429": {
        "basis": {"l": 429},
        "beamprop": {"sweep_l": 429},
    },
    "paper-beamprop": {
        "basis": {"l": 503},
        "beamprop": {"aln_enabled": True, "sweep_l": 503},
    },
}

_BOOL_STRINGS = {"true": True, "yes": True, "1": True,
                 "false": False, "no": False, "0": False}


def _coerce(section: str, key: str, raw: Any) -> Any:
    default, typ, _ = DEFAULTS[section][key]
    if isinstance(raw, typ) and not (typ is float and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if typ is bool:
            return _BOOL_STRINGS[text.lower()]
        if typ is int:
            return int(text)
        if typ is float:
            value = float(text)
            if math.isnan(value):
                raise ValueError
            return value
        return text
    except (ValueError, KeyError):
        raise ConfigError(
            f"[{section}] {key}: cannot parse {raw!r} as {typ.__name__}"
        ) from None


class RunConfig:
    """Resolved configuration: defaults, overlaid by preset, file and overrides."""

    def __init__(self, values: dict[str, dict[str, Any]] | None = None):
        self.values: dict[str, dict[str, Any]] = {
            section: {key: entry[0] for key, entry in keys.items()}
            for section, keys in DEFAULTS.items()
        }
        if values:
            self.update(values)

    def update(self, overrides: dict[str, dict[str, Any]]) -> None:
        for section, keys in overrides.items():
            if section not in DEFAULTS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in keys.items():
                if key not in DEFAULTS[section]:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                self.values[section][key] = _coerce(section, key, raw)
        self._validate()

    def _validate(self) -> None:
        picture = self.values["basis"]["picture"]
        if picture not in ("discrete", "semi-continuum"):
            raise ConfigError(f"[basis] picture must be discrete or semi-continuum, got {picture!r}")
        engine = self.values["dynamics"]["engine"]
        if engine not in ("amplitude", "lindblad"):
            raise ConfigError(f"[dynamics] engine must be amplitude or lindblad, got {engine!r}")
        for section, key in (
            ("geometry", "substrate_thickness_h"),
            ("geometry", "transducer_diameter_d"),
            ("materials", "v_longitudinal"),
            ("qubit", "t1"),
        ):
            if not self.values[section][key] > 0:
                raise ConfigError(f"[{section}] {key} must be positive")

    @classmethod
    def from_sources(
        cls,
        preset: str | None = None,
        path: str | None = None,
        overrides: dict[str, dict[str, Any]] | None = None,
    ) -> "RunConfig":
        cfg = cls()
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(
                    f"unknown preset {preset!r}; available: {', '.join(sorted(PRESETS))}"
                )
            cfg.update(copy.deepcopy(PRESETS[preset]))
        if path is not None:
            cfg.update(_read_ini(path))
        if overrides:
            cfg.update(overrides)
        return cfg

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    def as_dict(self) -> dict[str, dict[str, Any]]:
        return copy.deepcopy(self.values)

    def dumps(self) -> str:
        out = io.StringIO()
        for section, keys in self.values.items():
            out.write(f"[{section}]\n")
            for key, value in keys.items():
                out.write(f"{key} = {value}\n")
            out.write("\n")
        return out.getvalue()

    # -- typed views -------------------------------------------------------

    def geometry(self) -> ResonatorGeometry:
        g = self.values["geometry"]
        return ResonatorGeometry(
            substrate_thickness_h=g["substrate_thickness_h"],
            transducer_diameter_d=g["transducer_diameter_d"],
            transducer_thickness_t=g["transducer_thickness_t"],
            big_cylinder_radius_R=g["big_cylinder_radius_r"],
        )

    def materials(self) -> MaterialConstants:
        m = self.values["materials"]
        return MaterialConstants(
            v_longitudinal=m["v_longitudinal"],
            v_transverse_effective=m["v_transverse_effective"],
            stiffness_c33=m["stiffness_c33"],
            piezo_d33=m["piezo_d33"],
            field_E0=m["field_e0"],
            coupling_scale=m["coupling_scale"],
        )

    def beamprop_materials(self) -> MaterialConstants:
        b = self.values["beamprop"]
        m = self.materials()
        return MaterialConstants(
            v_longitudinal=b["v_l_substrate"],
            v_transverse_effective=b["v_t_substrate"],
            stiffness_c33=m.stiffness_c33,
            piezo_d33=m.piezo_d33,
            field_E0=m.field_E0,
            coupling_scale=m.coupling_scale,
        )

    def qubit(self) -> QubitParams:
        q = self.values["qubit"]
        return QubitParams(
            t1_qubit=q["t1"],
            detuning_delta_q=2 * math.pi * q["detuning_hz"],
        )

    def picture(self) -> Picture:
        return (
            Picture.DISCRETE
            if self.values["basis"]["picture"] == "discrete"
            else Picture.SEMI_CONTINUUM
        )


def _read_ini(path: str) -> dict[str, dict[str, Any]]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    return {s: dict(parser.items(s)) for s in parser.sections()}
