"""Command-line entry point: every simulation and analysis as a subcommand.

Each subcommand resolves a RunConfig (defaults -> preset -> file -> flags),
runs the corresponding module operation, and writes deterministic artifacts
atomically with a JSON manifest alongside each one.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis, beamprop, core, dynamics, protocols
from .config import ConfigError, RunConfig
from .dynamics import NumericalError
from .io_utils import atomic_write_bytes, atomic_write_text, sha256_file, write_manifest
from .protocols import CalibrationError

THREADS_ENV = "PHONON_QED_THREADS"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--preset", help="named device preset (paper-l503, paper-l429, paper-beamprop)")
    parser.add_argument("--out-dir", help="output directory (overrides [io] out_dir)")
    parser.add_argument("--threads", type=int, default=None,
                        help=f"worker budget (default ${THREADS_ENV} or 1)")
    parser.add_argument("--dry-run", action="store_true",
                        help="validate configuration and exit without computing")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a single config value")


def _add_basis_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--l", type=int, help="longitudinal mode number")
    parser.add_argument("--picture", choices=["discrete", "semi-continuum"])
    parser.add_argument("--count", type=int, help="number of transverse modes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonon-qed",
        description="Qubit / bulk-acoustic-phonon simulation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"phonon-qed {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", help="emit the mode basis CSV")
    _add_common(p); _add_basis_flags(p)

    p = sub.add_parser("rabi-map", help="emit a vacuum-Rabi chevron map CSV")
    _add_common(p); _add_basis_flags(p)
    p.add_argument("--engine", choices=["amplitude", "lindblad"])

    p = sub.add_parser("swap-calibrate", help="calibrate the swap pulse")
    _add_common(p); _add_basis_flags(p)

    p = sub.add_parser("phonon-t1", help="phonon T1 signal plus fit")
    _add_common(p); _add_basis_flags(p)

    p = sub.add_parser("phonon-t2", help="phonon Ramsey T2 signal plus fit")
    _add_common(p); _add_basis_flags(p)

    p = sub.add_parser("t1-sweep", help="effective T1 versus swap detuning")
    _add_common(p); _add_basis_flags(p)

    p = sub.add_parser("beamprop-sweep", help="acoustic resonance frequency sweep")
    _add_common(p)

    p = sub.add_parser("beamprop-mode", help="converge one acoustic mode profile")
    _add_common(p)
    p.add_argument("--frequency-hz", type=float, required=True,
                   help="resonance frequency to converge at, Hz")

    p = sub.add_parser("analyze", help="max-value plot, features, velocity fit")
    _add_common(p)
    p.add_argument("--input", required=True, help="matrix CSV spectroscopy map")
    p.add_argument("--window-count", type=int, default=1,
                   help="split the frequency axis into this many feature windows")
    p.add_argument("--l-start", type=int, default=None,
                   help="l label of the lowest-frequency window")
    return parser


def _resolve_config(args) -> RunConfig:
    overrides: dict[str, dict] = {}
    for item in args.set:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        dotted, value = item.split("=", 1)
        section, key = dotted.split(".", 1)
        overrides.setdefault(section.strip(), {})[key.strip()] = value.strip()
    if getattr(args, "l", None) is not None:
        overrides.setdefault("basis", {})["l"] = args.l
    if getattr(args, "picture", None) is not None:
        overrides.setdefault("basis", {})["picture"] = args.picture
    if getattr(args, "count", None) is not None:
        overrides.setdefault("basis", {})["mode_count"] = args.count
    if getattr(args, "engine", None) is not None:
        overrides.setdefault("dynamics", {})["engine"] = args.engine
    if args.out_dir is not None:
        overrides.setdefault("io", {})["out_dir"] = args.out_dir
    return RunConfig.from_sources(preset=args.preset, path=args.config, overrides=overrides)


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        n = int(os.environ.get(THREADS_ENV, "1"))
    if n < 1:
        raise ConfigError("thread budget must be at least 1")
    return n


class _Run:
    """Shared state for one CLI invocation: config, timing, outputs."""

    def __init__(self, args):
        self.config = _resolve_config(args)
        self.threads = _threads(args)
        self.out_dir = Path(self.config["io"]["out_dir"])
        self.inputs: dict[str, str] = {}
        self.started = time.perf_counter()

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def write(self, name: str, data: str | bytes) -> Path:
        path = self.out_dir / name
        if isinstance(data, bytes):
            atomic_write_bytes(path, data)
        else:
            atomic_write_text(path, data)
        write_manifest(
            path,
            version=__version__,
            resolved_config=self.config.as_dict(),
            inputs=self.inputs,
            wall_time_s=time.perf_counter() - self.started,
        )
        return path

    def basis(self) -> core.ModeBasis:
        b = self.config["basis"]
        return core.build_basis(
            b["l"], self.config.picture(), b["mode_count"],
            self.config.geometry(), self.config.materials(),
        )

    def dynamics_grids(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.config["dynamics"]
        detunings = 2 * math.pi * np.linspace(
            d["detuning_min_hz"], d["detuning_max_hz"], d["detuning_points"]
        )
        times = np.linspace(0.0, d["time_max"], d["time_points"])
        return detunings, times


def _cmd_modes(run: _Run, args) -> None:
    run.write("modes.csv", core.basis_csv(run.basis()))


def _cmd_rabi_map(run: _Run, args) -> None:
    basis = run.basis()
    detunings, times = run.dynamics_grids()
    d = run.config["dynamics"]
    phonon_t1s = (d["phonon_t1_default"],) * len(basis)
    rmap = dynamics.rabi_map(
        basis, run.config.qubit(), detunings, times,
        engine=d["engine"],
        phonon_t1s=phonon_t1s if d["engine"] == "lindblad" else None,
        fock_truncation=d["fock_truncation"],
        workers=run.threads,
    )
    run.write("rabi_map.csv", dynamics.rabi_map_csv(rmap))


def _calibrate(run: _Run) -> tuple[core.ModeBasis, protocols.SwapPulse]:
    basis = run.basis()
    detunings, times = run.dynamics_grids()
    swap = protocols.calibrate_swap(
        basis, run.config.qubit(), detunings, times, workers=run.threads
    )
    return basis, swap


def _cmd_swap_calibrate(run: _Run, args) -> None:
    _, swap = _calibrate(run)
    text = (
        "param,value\n"
        f"delta_q_hz,{swap.delta_q_during / (2 * math.pi)!r}\n"
        f"duration_s,{swap.duration!r}\n"
        f"rise_time_s,{swap.rise_time!r}\n"
    )
    run.write("swap.csv", text)


def _tau_axis(run: _Run) -> np.ndarray:
    p = run.config["protocols"]
    return np.linspace(0.0, p["tau_max"], p["tau_points"])


def _cmd_phonon_t1(run: _Run, args) -> None:
    basis, swap = _calibrate(run)
    p = run.config["protocols"]
    signal = protocols.phonon_t1_signal(
        basis, run.config.qubit(), swap, _tau_axis(run),
        full_sequence=p["full_sequence"],
        storage_detuning=2 * math.pi * p["storage_detuning_hz"],
        include_decay_during_second_swap=p["include_second_swap_decay"],
    )
    fit = protocols.fit_decay(signal, protocols.FitModel.EXP)
    run.write("phonon_t1.csv", protocols.decay_signal_csv(signal))
    run.write("phonon_t1_fit.csv", protocols.fit_result_csv(fit))


def _cmd_phonon_t2(run: _Run, args) -> None:
    basis, swap = _calibrate(run)
    p = run.config["protocols"]
    omega_art = 2 * math.pi * p["artificial_detuning_hz"]
    signal = protocols.phonon_t2_signal(
        basis, run.config.qubit(), swap, _tau_axis(run), artificial_detuning=omega_art
    )
    fit = protocols.fit_decay(
        signal, protocols.FitModel.DECAYING_SINE,
        initial_guess={"f_beat": p["artificial_detuning_hz"], "offset": 0.5},
    )
    run.write("phonon_t2.csv", protocols.decay_signal_csv(signal))
    run.write("phonon_t2_fit.csv", protocols.fit_result_csv(fit))


def _cmd_t1_sweep(run: _Run, args) -> None:
    basis = run.basis()
    detunings, times = run.dynamics_grids()
    p = run.config["protocols"]
    delays = np.linspace(0.0, p["sweep_delay_max"], p["sweep_delay_points"])
    points = protocols.t1_vs_swap_amplitude(
        basis, run.config.qubit(), detunings, delays,
        swap_time_grid=times,
        storage_detuning=2 * math.pi * p["storage_detuning_hz"],
        workers=run.threads,
    )
    run.write("t1_sweep.csv", protocols.sweep_csv(points))


def _beamprop_setup(run: _Run) -> tuple[beamprop.PropagatorConfig, beamprop.BeamGrid, float]:
    b = run.config["beamprop"]
    cfg = beamprop.PropagatorConfig(
        geom=run.config.geometry(),
        mat_substrate=run.config.beamprop_materials(),
        v_aln_longitudinal=b["v_aln_longitudinal"],
        absorber_width=b["absorber_width"],
        absorber_strength=b["absorber_strength"],
        roundtrips=b["roundtrips"],
        aln_enabled=b["aln_enabled"],
    )
    grid = beamprop.BeamGrid(nx=b["grid_nx"], ny=b["grid_nx"], extent=b["extent"])
    fsr = b["v_l_substrate"] / (2 * run.config.geometry().substrate_thickness_h)
    return cfg, grid, fsr


def _cmd_beamprop_sweep(run: _Run, args) -> None:
    cfg, grid, fsr = _beamprop_setup(run)
    b = run.config["beamprop"]
    center = b["sweep_l"] * fsr
    step = fsr / b["sweep_points_per_fsr"]
    freqs = np.arange(
        center + b["sweep_start_offset_hz"], center + b["sweep_stop_offset_hz"], step
    )
    spectrum = beamprop.frequency_sweep(cfg, grid, freqs, workers=run.threads)
    run.write("spectrum.csv", beamprop.spectrum_csv(spectrum))
    run.write("peaks.csv", beamprop.peaks_csv(spectrum))


def _cmd_beamprop_mode(run: _Run, args) -> None:
    cfg, grid, _ = _beamprop_setup(run)
    field = beamprop.converge_mode(cfg, grid, args.frequency_hz, fft_workers=run.threads)
    run.write("mode.bin", beamprop.mode_binary_bytes(field))


def _cmd_analyze(run: _Run, args) -> None:
    try:
        text = Path(args.input).read_text(encoding="utf-8")
    except OSError as exc:
        raise exc
    run.add_input(args.input)
    spec_map = analysis.read_matrix_csv(text)
    plot = analysis.max_value_plot(spec_map)
    run.write("maxvalue.csv", analysis.max_value_csv(plot))

    n_windows = max(args.window_count, 1)
    edges = np.linspace(0, plot.freq_axis.size, n_windows + 1).astype(int)
    features: list[tuple[int, float]] = []
    l_start = args.l_start if args.l_start is not None else run.config["basis"]["l"]
    for i in range(n_windows):
        lo, hi = edges[i], edges[i + 1]
        window = analysis.MaxValuePlot(
            freq_axis=plot.freq_axis[lo:hi], max_amplitude=plot.max_amplitude[lo:hi]
        )
        feature = analysis.extract_main_feature(window)
        features.append((l_start + i, feature.frequency))
    run.write("features.csv", analysis.features_csv(features))

    if len(features) >= 2:
        v_l, intercept, stderr = analysis.fit_longitudinal_velocity(
            features, run.config.geometry().substrate_thickness_h
        )
        run.write(
            "velocity.csv",
            "param,value\n"
            f"v_l_m_per_s,{v_l!r}\nintercept_hz,{intercept!r}\nstderr_m_per_s,{stderr!r}\n",
        )


_COMMANDS = {
    "modes": _cmd_modes,
    "rabi-map": _cmd_rabi_map,
    "swap-calibrate": _cmd_swap_calibrate,
    "phonon-t1": _cmd_phonon_t1,
    "phonon-t2": _cmd_phonon_t2,
    "t1-sweep": _cmd_t1_sweep,
    "beamprop-sweep": _cmd_beamprop_sweep,
    "beamprop-mode": _cmd_beamprop_mode,
    "analyze": _cmd_analyze,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = _Run(args)
        if args.dry_run:
            sys.stdout.write(run.config.dumps())
            return 0
        _COMMANDS[args.command](run, args)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, CalibrationError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
