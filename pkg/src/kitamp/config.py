"""Project configuration: one YAML file describing a device and run.

The loader builds every domain object up front and collects *all*
validation failures into a single error so a bad config can be repaired
in one pass.  See ``configs/kit_defaults.yaml`` for a commented example
with the default device values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .calfit import FitBounds
from .errors import ValidationError
from .gain import PumpSpec
from .network import BiasTeeSpec, CouplerSpec, FrequencyGrid, SupercellSpec
from .noisechain import AmplifierStage, Efficiency, ReadoutChain
from .nonlinearity import BiasState, FilmSpec


@dataclass(frozen=True)
class PumpConfig:
    """Pump settings; ``frequency = None`` defers to the default
    placement just below the first stopband edge."""

    frequency: float | None
    current_amplitude: float
    target_peak_gain_db: float | None = None


@dataclass(frozen=True)
class GainSettings:
    """How the off-state transmission entering the true gain is obtained.

    mode 'flat' uses ``flat_db`` at every point; 'csv' reads a
    (frequency_hz, off_db) file; 'components' computes the through path
    of two bias tees and the coupler from their circuit models.
    """

    mode: str = "components"
    flat_db: float = 0.0
    csv_path: str | None = None


@dataclass(frozen=True)
class SynthSettings:
    """Plan for synthesizing calibration sweeps."""

    pump_frequency: float
    frequencies: tuple
    rbw: float
    temperature: float
    voltage_max: float
    n_voltages: int
    noise_fraction: float
    g_sys_db: float
    asymmetry: float
    n_ex: float
    gain_shape_rolloff_db_per_ghz2: float = 0.0


@dataclass(frozen=True)
class ProjectConfig:
    film: FilmSpec
    bias: BiasState
    supercell: SupercellSpec
    pump: PumpConfig
    coupler: CouplerSpec
    bias_tee: BiasTeeSpec
    bias_tee_termination: str
    chain: ReadoutChain
    grids: dict
    gain_settings: GainSettings
    synth: SynthSettings
    fit_bounds: FitBounds
    output_dir: str


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


class _Collector:
    """Accumulates per-field failures while sections build."""

    def __init__(self):
        self.failures: list[str] = []

    def build(self, section: str, fn):
        try:
            return fn()
        except ValidationError as exc:
            names = exc.fields or [str(exc)]
            self.failures.extend(f"{section}.{name}" for name in names)
        except (KeyError, TypeError, AttributeError) as exc:
            self.failures.append(f"{section}: {exc!r}")
        return None


def _require(raw: dict, section: str, collector: _Collector) -> dict:
    data = raw.get(section)
    if not isinstance(data, dict):
        collector.failures.append(f"{section} (missing section)")
        return {}
    return data


def load_config(path) -> ProjectConfig:
    """Parse and validate a project YAML file.

    Raises ValidationError listing every failed field if any section is
    invalid or missing.
    """
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValidationError(
            f"config {path} did not parse to a mapping", fields=["<root>"]
        )
    col = _Collector()

    film_raw = _require(raw, "film", col)
    film = col.build(
        "film",
        lambda: FilmSpec(
            sheet_inductance=float(film_raw["sheet_inductance"]),
            thickness=float(film_raw["thickness"]),
            line_width=float(film_raw["line_width"]),
            i_star=float(film_raw["i_star"]),
            i_critical=float(film_raw["i_critical"]),
        ),
    )

    bias_raw = _require(raw, "bias", col)
    bias = col.build(
        "bias",
        lambda: BiasState(
            i_dc=float(bias_raw["i_dc"]),
            i_pump_amplitude=float(bias_raw.get("i_pump_amplitude", 0.0)),
        ),
    )

    sc_raw = _require(raw, "supercell", col)
    supercell = col.build(
        "supercell",
        lambda: SupercellSpec(
            n_unloaded=int(sc_raw["n_unloaded"]),
            n_loaded=int(sc_raw["n_loaded"]),
            unloaded_z0=float(sc_raw["unloaded_z0"]),
            loaded_z0=float(sc_raw["loaded_z0"]),
            unit_cell_length=float(sc_raw["unit_cell_length"]),
            n_supercells=int(sc_raw["n_supercells"]),
        ),
    )

    pump_raw = _require(raw, "pump", col)

    def build_pump():
        freq = pump_raw.get("frequency")
        target = pump_raw.get("target_peak_gain_db")
        amp = float(pump_raw["current_amplitude"])
        if freq is not None:
            PumpSpec(float(freq), amp)  # validation only
        elif not amp >= 0:
            raise ValidationError(
                "current_amplitude must be >= 0", fields=["current_amplitude"]
            )
        return PumpConfig(
            frequency=None if freq is None else float(freq),
            current_amplitude=amp,
            target_peak_gain_db=None if target is None else float(target),
        )

    pump = col.build("pump", build_pump)

    coupler_raw = _require(raw, "coupler", col)
    coupler = col.build(
        "coupler",
        lambda: CouplerSpec(
            coupled_length=float(coupler_raw["coupled_length"]),
            even_impedance=float(coupler_raw["even_impedance"]),
            odd_impedance=float(coupler_raw["odd_impedance"]),
            effective_phase_velocity_even=float(
                coupler_raw["effective_phase_velocity_even"]
            ),
            effective_phase_velocity_odd=float(
                coupler_raw["effective_phase_velocity_odd"]
            ),
        ),
    )

    tee_raw = _require(raw, "bias_tee", col)
    bias_tee = col.build(
        "bias_tee",
        lambda: BiasTeeSpec(
            series_capacitance=float(tee_raw["series_capacitance"]),
            dc_branch_squares=int(tee_raw["dc_branch_squares"]),
            dc_branch_width=float(tee_raw["dc_branch_width"]),
            dc_branch_impedance=float(tee_raw["dc_branch_impedance"]),
            sheet_inductance=float(tee_raw["sheet_inductance"]),
        ),
    )
    termination = str(tee_raw.get("dc_branch_termination", "matched"))
    if termination not in ("matched", "open"):
        col.failures.append("bias_tee.dc_branch_termination")

    chain_raw = _require(raw, "chain", col)

    def build_chain():
        def eff(key):
            d = chain_raw[key]
            return Efficiency(
                eta=float(d["eta"]),
                bath_temperature=float(d["bath_temperature"]),
            )

        def amp(key):
            d = chain_raw[key]
            internal = d.get("internal_transmission_db", 0.0)
            return AmplifierStage(
                gain=_db_to_linear(float(d["gain_db"])),
                added_noise=float(d["added_noise"]),
                internal_transmission=_db_to_linear(float(internal)),
            )

        return ReadoutChain(
            input_loss=eff("input_loss"),
            fsa=amp("fsa"),
            interstage_loss=eff("interstage_loss"),
            hemt=amp("hemt"),
            output_loss=eff("output_loss"),
            wamp=amp("wamp"),
        )

    chain = col.build("chain", build_chain)

    grids_raw = _require(raw, "grids", col)
    grids = {}
    for name, g in (grids_raw or {}).items():
        grid = col.build(
            f"grids.{name}",
            lambda g=g: FrequencyGrid.linear(
                float(g["start"]), float(g["stop"]), int(g["points"])
            ),
        )
        if grid is not None:
            grids[name] = grid
    for required_grid in ("dispersion", "gain", "components", "noise"):
        if required_grid not in grids and not any(
            x.startswith(f"grids.{required_grid}") for x in col.failures
        ):
            col.failures.append(f"grids.{required_grid} (missing)")

    gs_raw = raw.get("gain_settings") or {}

    def build_gain_settings():
        mode = str(gs_raw.get("mode", "components"))
        if mode not in ("flat", "csv", "components"):
            raise ValidationError(
                f"unknown off-transmission mode {mode!r}", fields=["mode"]
            )
        flat_db = float(gs_raw.get("flat_db", 0.0))
        if mode == "flat" and flat_db > 0:
            raise ValidationError(
                "flat_db must be <= 0 dB", fields=["flat_db"]
            )
        csv_path = gs_raw.get("csv_path")
        if mode == "csv" and not csv_path:
            raise ValidationError(
                "csv mode requires csv_path", fields=["csv_path"]
            )
        return GainSettings(mode=mode, flat_db=flat_db, csv_path=csv_path)

    gain_settings = col.build("gain_settings", build_gain_settings)

    synth_raw = _require(raw, "synth", col)

    def build_synth():
        truth = synth_raw["truth"]
        freqs = synth_raw.get("frequencies")
        if freqs is None:
            band = synth_raw["band"]
            import numpy as np

            freqs = np.linspace(
                float(band["start"]), float(band["stop"]), int(band["points"])
            ).tolist()
        freqs = tuple(float(f) for f in freqs)
        pump_f = float(synth_raw["pump_frequency"])
        if any(not 0 < f < pump_f for f in freqs):
            raise ValidationError(
                "synth frequencies must lie in (0, pump_frequency)",
                fields=["frequencies"],
            )
        return SynthSettings(
            pump_frequency=pump_f,
            frequencies=freqs,
            rbw=float(synth_raw["rbw"]),
            temperature=float(synth_raw["temperature"]),
            voltage_max=float(synth_raw["voltage_max"]),
            n_voltages=int(synth_raw["n_voltages"]),
            noise_fraction=float(synth_raw["noise_fraction"]),
            g_sys_db=float(truth["g_sys_db"]),
            asymmetry=float(truth["asymmetry"]),
            n_ex=float(truth["n_ex"]),
            gain_shape_rolloff_db_per_ghz2=float(
                synth_raw.get("gain_shape_rolloff_db_per_ghz2", 0.0)
            ),
        )

    synth = col.build("synth", build_synth)

    fb_raw = raw.get("fit_bounds") or {}
    fit_bounds = col.build(
        "fit_bounds",
        lambda: FitBounds(
            g_sys=tuple(float(x) for x in fb_raw.get("g_sys", (1e-30, 1e30))),
            asymmetry=tuple(
                float(x) for x in fb_raw.get("asymmetry", (0.01, 100.0))
            ),
            n_ex=tuple(float(x) for x in fb_raw.get("n_ex", (0.0, 1e6))),
        ),
    )

    output_dir = str(raw.get("output_dir", "out"))

    if col.failures:
        raise ValidationError(
            "config validation failed for: " + "; ".join(col.failures),
            fields=col.failures,
        )
    return ProjectConfig(
        film=film,
        bias=bias,
        supercell=supercell,
        pump=pump,
        coupler=coupler,
        bias_tee=bias_tee,
        bias_tee_termination=termination,
        chain=chain,
        grids=grids,
        gain_settings=gain_settings,
        synth=synth,
        fit_bounds=fit_bounds,
        output_dir=output_dir,
    )
