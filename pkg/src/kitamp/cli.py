"""Batch command-line front end.

Subcommands::

    kitamp design       --config cfg.yaml [--out DIR] [--grid S:E:N]
    kitamp gain         --config cfg.yaml [--out DIR] [--grid S:E:N]
    kitamp components   --config cfg.yaml [--out DIR] [--grid S:E:N]
    kitamp noise-budget --config cfg.yaml [--out DIR] [--grid S:E:N]
    kitamp synth        --config cfg.yaml [--out DIR] [--seed N]
    kitamp fit          SWEEP.csv [...] [--bounds LO,HI] [--band LO:HI]
                        [--out DIR] [--rest-gain-db X]

``--validate`` (with or without a subcommand) checks the config and
exits.  Every command is deterministic for a given (config, seed):
reruns produce byte-identical files.  Exit codes: 0 success,
1 validation, 2 numerical, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from ._io import fmt_float, write_json
from .calfit import (
    FitBounds,
    SyntheticSpec,
    fit_band,
    read_sweep,
    shaped_gain_db,
    synthesize_sweep,
    write_fit_json,
    write_sweep_csv,
    write_sweep_sidecar,
)
from .config import ProjectConfig, load_config
from .errors import (
    KitError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .gain import (
    AmplifierMedium,
    PumpSpec,
    default_pump_frequency,
    gain_profile,
    medium_dispersion,
    tune_pump_amplitude,
    write_gain_csv,
    write_gain_summary,
)
from .network import (
    FrequencyGrid,
    bias_tee_sparams,
    coupler_metrics,
    coupler_sparams,
    dc_branch_resonances,
    mean_slowness,
)
from .noisechain import chain_budget
from .touchstone import write_sparams_csv, write_touchstone


def _parse_grid(text: str) -> FrequencyGrid:
    try:
        start, stop, points = text.split(":")
        return FrequencyGrid.linear(float(start), float(stop), int(points))
    except (ValueError, TypeError):
        raise ValidationError(
            f"--grid expects START:STOP:POINTS in Hz, got {text!r}",
            fields=["--grid"],
        ) from None


def _parse_bounds(text: str) -> tuple:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(
            f"--bounds expects LO,HI, got {text!r}", fields=["--bounds"]
        ) from None
    if not lo < hi:
        raise ValidationError(
            "--bounds requires LO < HI", fields=["--bounds"]
        )
    return (lo, hi)


def _outdir(args, cfg: ProjectConfig | None) -> Path:
    out = args.out or (cfg.output_dir if cfg else "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolved_pump_frequency(cfg: ProjectConfig, dispersion) -> float:
    if cfg.pump.frequency is not None:
        return cfg.pump.frequency
    return default_pump_frequency(dispersion)


def _write_plot_manifest(out: Path, entries: list) -> None:
    write_json(out / "plots.json", {"plots": entries})


# ---------------------------------------------------------------------------
# Commands


def cmd_design(cfg: ProjectConfig, args) -> int:
    out = _outdir(args, cfg)
    grid = args.grid or cfg.grids["dispersion"]
    medium = AmplifierMedium(cfg.film, cfg.supercell, cfg.bias)
    disp = medium_dispersion(medium, float(grid.points[-1]), len(grid))
    sc = cfg.supercell
    lp = cfg.film.inductance_per_length
    report = {
        "total_length_m": sc.total_length,
        "n_supercells": sc.n_supercells,
        "cells_per_supercell": sc.cells_per_supercell,
        "n_unloaded": sc.n_unloaded,
        "n_loaded": sc.n_loaded,
        "unit_cell_length_m": sc.unit_cell_length,
        "unloaded_z0_ohm": sc.unloaded_z0,
        "loaded_z0_ohm": sc.loaded_z0,
        "inductance_per_length_h_per_m": lp,
        "unloaded_capacitance_per_length_f_per_m": lp / sc.unloaded_z0**2,
        "loaded_capacitance_per_length_f_per_m": lp / sc.loaded_z0**2,
        "mean_phase_velocity_m_per_s": 1.0 / mean_slowness(sc, cfg.film),
        "stopbands_hz": [list(b) for b in disp.stopband_intervals()[:2]],
    }
    write_json(out / "design.json", report)
    print(f"total medium length: {sc.total_length * 100:.4f} cm")
    print(
        f"supercell: {sc.n_unloaded} cells at {sc.unloaded_z0:g} ohm + "
        f"{sc.n_loaded} cells at {sc.loaded_z0:g} ohm, "
        f"{sc.n_supercells} supercells"
    )
    for k, band in enumerate(report["stopbands_hz"], start=1):
        print(
            f"stopband {k}: {band[0] / 1e9:.4f} - {band[1] / 1e9:.4f} GHz"
        )
    print(f"wrote {out / 'design.json'}")
    return 0


def _off_transmission(cfg: ProjectConfig, grid: FrequencyGrid) -> np.ndarray:
    mode = cfg.gain_settings.mode
    if mode == "flat":
        return np.full(len(grid), cfg.gain_settings.flat_db)
    if mode == "csv":
        rows = []
        path = Path(cfg.gain_settings.csv_path)
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["frequency_hz", "off_db"]:
                raise ParseError(
                    "expected header frequency_hz,off_db",
                    path=str(path),
                    line=1,
                )
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError) as exc:
                    raise ParseError(
                        f"bad row: {exc}", path=str(path), line=lineno
                    ) from None
        rows.sort()
        f_pts = np.array([r[0] for r in rows])
        off = np.array([r[1] for r in rows])
        return np.interp(grid.points, f_pts, off)
    # components mode: two bias tees plus the coupler through path
    tee = bias_tee_sparams(cfg.bias_tee, grid)
    cpl = coupler_sparams(cfg.coupler, grid)
    through_db = 20.0 * np.log10(np.abs(tee.s(2, 1))) * 2.0 + 20.0 * np.log10(
        np.abs(cpl.s(2, 1))
    )
    return np.minimum(through_db, 0.0)


def cmd_gain(cfg: ProjectConfig, args) -> int:
    out = _outdir(args, cfg)
    grid = args.grid or cfg.grids["gain"]
    medium = AmplifierMedium(cfg.film, cfg.supercell, cfg.bias)
    disp_top = max(
        float(cfg.grids["dispersion"].points[-1]), 1.25 * grid.points[-1]
    )
    dispersion = medium_dispersion(medium, disp_top)
    f_pump = _resolved_pump_frequency(cfg, dispersion)
    amplitude = cfg.pump.current_amplitude
    if cfg.pump.target_peak_gain_db is not None:
        probe = FrequencyGrid(grid.points[:: max(1, len(grid) // 12)])
        amplitude = tune_pump_amplitude(
            medium,
            f_pump,
            probe,
            target_peak_gain_db := cfg.pump.target_peak_gain_db,
            dispersion=dispersion,
        )
        print(
            f"tuned pump amplitude {amplitude:.4e} A for "
            f"{target_peak_gain_db:g} dB peak"
        )
    pump = PumpSpec(f_pump, amplitude)
    off = _off_transmission(cfg, grid)
    profile = gain_profile(medium, pump, grid, off, dispersion=dispersion)
    write_gain_csv(out / "gain_profile.csv", profile)
    summary = write_gain_summary(out / "gain_summary.json", profile)
    _write_plot_manifest(
        out,
        [
            {
                "file": "gain_profile.csv",
                "x": "frequency_hz",
                "y": ["on_off_db", "true_gain_db"],
                "title": "parametric gain",
            }
        ],
    )
    print(f"pump: {f_pump / 1e9:.4f} GHz at {amplitude:.4e} A")
    print(
        f"peak true gain {summary['peak_true_gain_db']:.2f} dB at "
        f"{summary['peak_frequency_hz'] / 1e9:.3f} GHz"
    )
    print(
        f"3 dB band {summary['band_lo_hz'] / 1e9:.3f} - "
        f"{summary['band_hi_hz'] / 1e9:.3f} GHz "
        f"({summary['bandwidth_hz'] / 1e9:.3f} GHz), median true gain "
        f"{summary['median_true_gain_db']:.2f} dB"
    )
    print(f"wrote {out / 'gain_profile.csv'}, {out / 'gain_summary.json'}")
    return 0


def cmd_components(cfg: ProjectConfig, args) -> int:
    out = _outdir(args, cfg)
    grid = args.grid or cfg.grids["components"]
    cpl = coupler_sparams(cfg.coupler, grid)
    tee = bias_tee_sparams(cfg.bias_tee, grid)
    write_touchstone(out / "coupler.s4p", cpl)
    write_sparams_csv(out / "coupler.csv", cpl)
    write_touchstone(out / "bias_tee.s3p", tee)
    write_sparams_csv(out / "bias_tee.csv", tee)
    metrics = coupler_metrics(cpl)
    with (out / "coupler_metrics.csv").open(
        "w", newline="", encoding="utf-8"
    ) as fh:
        writer = csv.writer(fh)
        keys = [
            "frequency_hz",
            "through_db",
            "forward_coupling_db",
            "reverse_coupling_db",
            "directivity_db",
        ]
        writer.writerow(keys)
        for j in range(len(grid)):
            writer.writerow([fmt_float(metrics[k][j]) for k in keys])
    resonances = dc_branch_resonances(
        cfg.bias_tee,
        float(grid.points[-1]),
        termination=cfg.bias_tee_termination,
    )
    mid = len(grid) // 2
    write_json(
        out / "components.json",
        {
            "coupler_midband_hz": grid.points[mid],
            "coupler_midband_forward_db": metrics["forward_coupling_db"][mid],
            "coupler_midband_directivity_db": metrics["directivity_db"][mid],
            "dc_branch_termination": cfg.bias_tee_termination,
            "dc_branch_resonances_hz": resonances.tolist(),
            "dc_branch_total_inductance_h": cfg.bias_tee.dc_branch_total_inductance,
        },
    )
    _write_plot_manifest(
        out,
        [
            {
                "file": "coupler_metrics.csv",
                "x": "frequency_hz",
                "y": ["through_db", "forward_coupling_db", "reverse_coupling_db"],
                "title": "directional coupler",
            }
        ],
    )
    print(
        f"coupler midband forward coupling "
        f"{metrics['forward_coupling_db'][mid]:.2f} dB, directivity "
        f"{metrics['directivity_db'][mid]:.2f} dB"
    )
    res_ghz = ", ".join(f"{f / 1e9:.3f}" for f in resonances[:8])
    print(f"dc branch resonances (GHz): {res_ghz}")
    print(f"wrote coupler.s4p, bias_tee.s3p and CSVs under {out}")
    return 0


def cmd_noise_budget(cfg: ProjectConfig, args) -> int:
    out = _outdir(args, cfg)
    grid = args.grid or cfg.grids["noise"]
    f_pump = cfg.synth.pump_frequency
    rows = []
    for f in grid.points:
        f_idler = f_pump - float(f)
        if f_idler <= 0:
            raise ValidationError(
                f"noise grid point {f:.6g} Hz at or above the pump",
                fields=["grids.noise"],
            )
        rows.append(chain_budget(cfg.chain, float(f), f_idler))
    keys = list(rows[0].keys())
    with (out / "noise_budget.csv").open(
        "w", newline="", encoding="utf-8"
    ) as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in rows:
            writer.writerow(
                [
                    fmt_float(row[k]) if not isinstance(row[k], bool) else str(row[k])
                    for k in keys
                ]
            )
    write_json(out / "noise_budget.json", {"rows": rows})
    _write_plot_manifest(
        out,
        [
            {
                "file": "noise_budget.csv",
                "x": "frequency_hz",
                "y": ["nsys_limit_quanta", "nsys_exact_quanta"],
                "title": "system noise budget",
            }
        ],
    )
    mid = rows[len(rows) // 2]
    print(
        f"system noise at {mid['frequency_hz'] / 1e9:.3f} GHz: "
        f"{mid['nsys_limit_quanta']:.3f} quanta (high-gain limit), "
        f"{mid['nsys_exact_quanta']:.3f} quanta (exact)"
    )
    print(f"wrote {out / 'noise_budget.csv'}")
    return 0


def cmd_synth(cfg: ProjectConfig, args) -> int:
    out = _outdir(args, cfg)
    sy = cfg.synth
    seed = args.seed if args.seed is not None else 0
    voltages = np.linspace(-sy.voltage_max, sy.voltage_max, sy.n_voltages)
    center = 0.5 * (min(sy.frequencies) + max(sy.frequencies))
    manifest = {
        "seed": seed,
        "truth": {
            "g_sys_db": sy.g_sys_db,
            "asymmetry": sy.asymmetry,
            "n_ex": sy.n_ex,
        },
        "sweeps": [],
    }
    for k, f in enumerate(sy.frequencies):
        g_db = float(
            shaped_gain_db(
                f, sy.g_sys_db, center, sy.gain_shape_rolloff_db_per_ghz2
            )
        )
        spec = SyntheticSpec(
            g_sys=10.0 ** (g_db / 10.0),
            asymmetry=sy.asymmetry,
            n_ex=sy.n_ex,
            voltages=voltages,
            noise_fraction=sy.noise_fraction,
            seed=seed + k,
        )
        f_idler = sy.pump_frequency - f
        sweep = synthesize_sweep(spec, f, f_idler, sy.temperature, sy.rbw)
        stem = f"sweep_{k:03d}"
        write_sweep_csv(out / f"{stem}.csv", sweep)
        write_sweep_sidecar(out / f"{stem}.json", sweep, f_idler)
        manifest["sweeps"].append(
            {
                "file": f"{stem}.csv",
                "frequency_hz": f,
                "idler_frequency_hz": f_idler,
                "g_sys_db": g_db,
            }
        )
    write_json(out / "synth_manifest.json", manifest)
    print(
        f"wrote {len(sy.frequencies)} sweeps to {out} "
        f"(seed {seed}, noise {sy.noise_fraction:g})"
    )
    return 0


def cmd_fit(args) -> int:
    out = _outdir(args, None)
    bounds = FitBounds(
        asymmetry=args.bounds if args.bounds else (0.01, 100.0)
    )
    sweeps, idlers, names = [], [], []
    for path in args.sweeps:
        sweep, f_idler = read_sweep(path)
        sweeps.append(sweep)
        idlers.append(f_idler)
        names.append(Path(path).stem)
    band = fit_band(
        sweeps,
        bounds,
        idlers,
        band=args.band,
        rest_of_chain_gain_db=args.rest_gain_db,
    )
    for name, result in zip(names, band.results):
        write_fit_json(out / f"fit_{name}.json", result)
    write_json(
        out / "fit_band.json",
        {
            "band_hz": list(band.band),
            "median_n_sys_quanta": band.median_n_sys,
            "median_g_sys_db": band.median_g_sys_db,
            "median_fsa_true_gain_db": band.median_fsa_true_gain_db,
            "n_fitted": len(band.results),
            "n_failed": len(band.failed),
            "failed": [
                {"frequency_hz": f, "error": msg} for f, msg in band.failed
            ],
        },
    )
    print(
        f"fitted {len(band.results)} sweeps ({len(band.failed)} failed); "
        f"median N_sys = {band.median_n_sys:.3f} quanta over "
        f"{band.band[0] / 1e9:.3f} - {band.band[1] / 1e9:.3f} GHz"
    )
    print(f"wrote per-sweep fits and {out / 'fit_band.json'}")
    return 2 if band.failed else 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kitamp",
        description="kinetic-inductance traveling-wave amplifier toolkit",
    )
    parser.add_argument("--config", help="project YAML file")
    parser.add_argument("--validate", action="store_true",
                        help="validate the config and exit")
    parser.add_argument("--out", help="output directory")
    sub = parser.add_subparsers(dest="command")

    # SUPPRESS keeps subcommand defaults from clobbering flags given
    # before the subcommand name
    def add(name):
        p = sub.add_parser(name)
        p.add_argument("--config", default=argparse.SUPPRESS)
        p.add_argument("--out", default=argparse.SUPPRESS)
        p.add_argument(
            "--validate", action="store_true", default=argparse.SUPPRESS
        )
        p.add_argument(
            "--grid",
            type=_parse_grid,
            default=argparse.SUPPRESS,
            help="frequency grid override START:STOP:POINTS (Hz)",
        )
        return p

    add("design")
    add("gain")
    add("components")
    add("noise-budget")
    p_synth = add("synth")
    p_synth.add_argument(
        "--seed", type=int, default=argparse.SUPPRESS,
        help="RNG seed (default 0)",
    )
    p_fit = sub.add_parser("fit")
    p_fit.add_argument("sweeps", nargs="+", help="sweep CSV files")
    p_fit.add_argument("--out", default=argparse.SUPPRESS)
    p_fit.add_argument(
        "--bounds",
        type=_parse_bounds,
        help="asymmetry bounds LO,HI (default 0.01,100)",
    )
    p_fit.add_argument(
        "--band",
        type=lambda s: tuple(float(x) for x in s.split(":")),
        help="median window LO:HI in Hz (default: all sweeps)",
    )
    p_fit.add_argument(
        "--rest-gain-db",
        type=float,
        default=0.0,
        help="gain of stages 2-3, subtracted to report first-stage gain",
    )
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    for name, default in (
        ("config", None), ("out", None), ("validate", False),
        ("grid", None), ("seed", None),
    ):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        if args.validate:
            if not args.config:
                raise ValidationError(
                    "--validate requires --config", fields=["--config"]
                )
            load_config(args.config)
            print(f"config {args.config} is valid")
            return 0
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        if args.command == "fit":
            return cmd_fit(args)
        if not args.config:
            raise ValidationError(
                f"{args.command} requires --config", fields=["--config"]
            )
        cfg = load_config(args.config)
        dispatch = {
            "design": cmd_design,
            "gain": cmd_gain,
            "components": cmd_components,
            "noise-budget": cmd_noise_budget,
            "synth": cmd_synth,
        }
        return dispatch[args.command](cfg, args)
    except (ValidationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except KitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
