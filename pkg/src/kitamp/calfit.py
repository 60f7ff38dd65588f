"""Shot-noise calibration engine: sweep synthesis and bounded fitting.

A calibration sweep records analyzer power versus junction bias voltage
at one signal frequency.  The model fit to it is

    P(V) = G_sys * (N(V, f_s) + r * N(V, f_i) + N_ex) * h f_s * B,

with N the junction emission in quanta, r the idler/signal gain
asymmetry of the first stage, N_ex its excess noise, and B the analyzer
resolution bandwidth.  G_sys and r are strictly positive and are fitted
through log transforms (bounds enforced by the transformation, not by
clipping); N_ex is bounded linearly at zero.  Because the idler term
differs from the signal term only through the 1/f scaling and crossover
rounding of N(V, f), the asymmetry is weakly identified -- fits start
from several moment-based initial points and physical bounds keep the
optimizer off the degenerate large-G/negative-r ridge.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import e as _e, h as _h
from scipy.optimize import least_squares

from ._io import fmt_float, write_json
from .errors import DomainError, FitError, ParseError, ValidationError
from .noisechain import sntj_noise

#: Default physical parameter bounds (linear units).
DEFAULT_ASYMMETRY_BOUNDS = (0.01, 100.0)


@dataclass(frozen=True, eq=False)
class NoiseSweep:
    """Measured analyzer power versus junction bias at one frequency."""

    frequency: float
    sntj_voltages: np.ndarray
    measured_output: np.ndarray  # W
    resolution_bandwidth: float
    chain_temperature: float

    def __post_init__(self):
        v = np.asarray(self.sntj_voltages, dtype=float)
        p = np.asarray(self.measured_output, dtype=float)
        object.__setattr__(self, "sntj_voltages", v)
        object.__setattr__(self, "measured_output", p)
        bad = []
        if not self.frequency > 0:
            bad.append("frequency")
        if not self.resolution_bandwidth > 0:
            bad.append("resolution_bandwidth")
        if self.chain_temperature < 0:
            bad.append("chain_temperature")
        if v.ndim != 1 or v.size < 7:
            bad.append("sntj_voltages (need >= 7 points)")
        elif not (v.min() < 0.0 < v.max()):
            bad.append("sntj_voltages (must span both signs)")
        elif not np.all(np.diff(v) > 0):
            bad.append("sntj_voltages (must be strictly increasing)")
        if p.shape != v.shape:
            bad.append("measured_output (length mismatch)")
        if bad:
            raise ValidationError(
                f"invalid NoiseSweep: {', '.join(bad)}", fields=bad
            )


@dataclass(frozen=True)
class FitBounds:
    """Physical parameter bounds, linear units, lo < hi each."""

    g_sys: tuple = (1e-30, 1e30)
    asymmetry: tuple = DEFAULT_ASYMMETRY_BOUNDS
    n_ex: tuple = (0.0, 1e6)

    def __post_init__(self):
        bad = [
            name
            for name in ("g_sys", "asymmetry", "n_ex")
            if not getattr(self, name)[0] < getattr(self, name)[1]
        ]
        if not self.g_sys[0] > 0:
            bad.append("g_sys (must be positive)")
        if bad:
            raise ValidationError(
                f"invalid FitBounds: {', '.join(bad)}", fields=bad
            )


@dataclass(frozen=True, eq=False)
class FitResult:
    """Fitted calibration parameters and diagnostics for one sweep."""

    g_sys: float
    g_sys_db: float
    asymmetry: float
    n_ex: float
    n_sys: float
    residual_rms: float  # W
    covariance: np.ndarray  # 3x3 over (g_sys, asymmetry, n_ex)
    converged: bool
    at_bound: dict
    start_diagnostics: list
    frequency: float
    idler_frequency: float

    def to_dict(self) -> dict:
        return {
            "frequency_hz": self.frequency,
            "idler_frequency_hz": self.idler_frequency,
            "g_sys": self.g_sys,
            "g_sys_db": self.g_sys_db,
            "asymmetry": self.asymmetry,
            "n_ex_quanta": self.n_ex,
            "n_sys_quanta": self.n_sys,
            "residual_rms_w": self.residual_rms,
            "covariance": [list(row) for row in self.covariance],
            "converged": self.converged,
            "at_bound": dict(self.at_bound),
            "start_diagnostics": list(self.start_diagnostics),
        }


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    """Ground truth and acquisition plan for a synthetic sweep."""

    g_sys: float
    asymmetry: float
    n_ex: float
    voltages: np.ndarray
    noise_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        v = np.asarray(self.voltages, dtype=float)
        object.__setattr__(self, "voltages", v)
        bad = []
        if not self.g_sys > 0:
            bad.append("g_sys")
        if not self.asymmetry > 0:
            bad.append("asymmetry")
        if self.n_ex < 0:
            bad.append("n_ex")
        if self.noise_fraction < 0:
            bad.append("noise_fraction")
        if bad:
            raise ValidationError(
                f"invalid SyntheticSpec: {', '.join(bad)}", fields=bad
            )


def model_output(
    g_sys: float,
    asymmetry: float,
    n_ex: float,
    v,
    f_signal: float,
    f_idler: float,
    temperature: float,
    rbw: float,
):
    """Analyzer power in watts for junction bias ``v`` (scalar or array)."""
    if not (g_sys > 0 and asymmetry > 0 and n_ex >= 0):
        raise DomainError(
            "model parameters must be physical: g_sys > 0, asymmetry > 0, "
            "n_ex >= 0"
        )
    n_s = sntj_noise(v, f_signal, temperature)
    n_i = sntj_noise(v, f_idler, temperature)
    return g_sys * (n_s + asymmetry * n_i + n_ex) * _h * f_signal * rbw


def shaped_gain_db(f, peak_db: float, center_hz: float, rolloff_db_per_ghz2: float):
    """Quadratic band shape: peak_db - rolloff * ((f - center)/1 GHz)^2."""
    df_ghz = (np.asarray(f, dtype=float) - center_hz) / 1e9
    return peak_db - rolloff_db_per_ghz2 * df_ghz**2


def synthesize_sweep(
    spec: SyntheticSpec,
    f_signal: float,
    f_idler: float,
    temperature: float,
    rbw: float,
) -> NoiseSweep:
    """Model curve plus seeded multiplicative Gaussian noise.

    Deterministic: the same spec (including seed) produces bit-identical
    sweeps.
    """
    p = model_output(
        spec.g_sys,
        spec.asymmetry,
        spec.n_ex,
        spec.voltages,
        f_signal,
        f_idler,
        temperature,
        rbw,
    )
    if spec.noise_fraction > 0:
        rng = np.random.default_rng(spec.seed)
        p = p * (1.0 + spec.noise_fraction * rng.standard_normal(p.shape))
    return NoiseSweep(
        frequency=f_signal,
        sntj_voltages=spec.voltages,
        measured_output=p,
        resolution_bandwidth=rbw,
        chain_temperature=temperature,
    )


# ---------------------------------------------------------------------------
# Fitting


def _initial_guesses(sweep: NoiseSweep, f_idler: float, bounds: FitBounds):
    """Moment-based starting points.

    The large-|V| slope fixes G_sys (1 + r f_s/f_i) e B / 2; the
    extrapolated V = 0 intercept fixes G_sys N_ex h f_s B.  Three starts
    span the asymmetry range: flat (r = 1), a HEMT-floor guess with
    N_ex pinned at 10 quanta, and a slope-only guess at low asymmetry.
    """
    v = sweep.sntj_voltages
    p = sweep.measured_output
    f_s = sweep.frequency
    scale = _h * f_s * sweep.resolution_bandwidth

    vam = np.abs(v)
    top = vam >= 0.75 * vam.max()
    slope, intercept = np.polyfit(vam[top], p[top], 1)
    slope = max(slope, 1e-300)
    intercept = max(intercept, 0.0)
    p0 = float(np.interp(0.0, v, p))

    lo_r, hi_r = bounds.asymmetry

    def clamp(x, lo, hi):
        return min(max(x, lo * 1.0001 if lo > 0 else lo + 1e-9), hi * 0.9999)

    def g_from_slope(r):
        return slope / (_e / 2.0 * sweep.resolution_bandwidth * (1.0 + r * f_s / f_idler))

    def nex_from_intercept(g):
        return intercept / (g * scale)

    starts = []
    g1 = max(g_from_slope(1.0), bounds.g_sys[0] * 2.0)
    starts.append(
        ("flat-asymmetry", g1, clamp(1.0, lo_r, hi_r),
         clamp(nex_from_intercept(g1), *bounds.n_ex))
    )
    n_hemt = clamp(10.0, *bounds.n_ex)
    g2 = max(p0 / (scale * (1.0 + clamp(1.0, lo_r, hi_r) + n_hemt)),
             bounds.g_sys[0] * 2.0)
    starts.append(("hemt-floor", g2, clamp(1.0, lo_r, hi_r), n_hemt))
    r3 = clamp(0.3, lo_r, hi_r)
    g3 = max(g_from_slope(r3), bounds.g_sys[0] * 2.0)
    starts.append(
        ("asymptote-slope", g3, r3, clamp(nex_from_intercept(g3), *bounds.n_ex))
    )
    return starts


def fit_noise_sweep(
    sweep: NoiseSweep, bounds: FitBounds, f_idler: float
) -> FitResult:
    """Bounded nonlinear least squares over (g_sys, asymmetry, n_ex).

    Trust-region fit with g_sys (and asymmetry, when its lower bound is
    positive) log-transformed; multi-start from moment estimates.  A
    solution landing on a bound is flagged, not an error; FitError is
    raised only when every start fails.
    """
    if not f_idler > 0:
        raise DomainError("f_idler must be positive")
    v = sweep.sntj_voltages
    p_meas = sweep.measured_output
    f_s = sweep.frequency
    temp = sweep.chain_temperature
    rbw = sweep.resolution_bandwidth
    p_scale = float(np.max(np.abs(p_meas)))
    if not p_scale > 0:
        raise DomainError("sweep contains no signal")

    n_s = sntj_noise(v, f_s, temp)
    n_i = sntj_noise(v, f_idler, temp)
    quanta_scale = _h * f_s * rbw

    log_r = bounds.asymmetry[0] > 0

    def pack(g, r, nex):
        return np.array(
            [math.log(g), math.log(r) if log_r else r, nex]
        )

    def unpack(u):
        g = math.exp(u[0])
        r = math.exp(u[1]) if log_r else u[1]
        return g, r, u[2]

    lo = pack(bounds.g_sys[0], bounds.asymmetry[0] if log_r else 0.0,
              bounds.n_ex[0])
    hi = pack(bounds.g_sys[1], bounds.asymmetry[1] if log_r else 0.0,
              bounds.n_ex[1])
    if not log_r:
        lo[1], hi[1] = bounds.asymmetry

    def residuals(u):
        g, r, nex = unpack(u)
        model = g * (n_s + r * n_i + nex) * quanta_scale
        return (model - p_meas) / p_scale

    diagnostics = []
    best = None
    for name, g0, r0, nex0 in _initial_guesses(sweep, f_idler, bounds):
        x0 = np.clip(pack(g0, r0, nex0), lo + 1e-12, hi - 1e-12)
        try:
            res = least_squares(
                residuals,
                x0,
                bounds=(lo, hi),
                method="trf",
                xtol=1e-15,
                ftol=1e-15,
                gtol=1e-15,
                x_scale="jac",
                max_nfev=2000,
            )
        except Exception as exc:  # singular model, overflow, ...
            diagnostics.append(
                {"start": name, "converged": False, "message": str(exc)}
            )
            continue
        entry = {
            "start": name,
            "converged": bool(res.status > 0),
            "cost": float(res.cost),
            "status": int(res.status),
            "message": res.message,
        }
        diagnostics.append(entry)
        if res.status > 0 and (best is None or res.cost < best.cost):
            best = res
    if best is None:
        raise FitError(
            "no fit start converged", starts=diagnostics
        )

    g, r, nex = unpack(best.x)
    # Gauss-Newton covariance at the optimum, mapped to linear parameters
    n_pts = v.size
    dof = max(n_pts - 3, 1)
    ssr = 2.0 * best.cost * p_scale**2
    sigma2 = ssr / dof
    jac = best.jac * p_scale  # d(residual * p_scale)/du
    jtj = jac.T @ jac
    cov_u = np.linalg.pinv(jtj) * sigma2
    dpu = np.diag([g, r if log_r else 1.0, 1.0])
    cov = dpu @ cov_u @ dpu

    def near(x, b, span):
        return abs(x - b) < 1e-6 * span

    at_bound = {
        "g_sys": near(best.x[0], lo[0], hi[0] - lo[0])
        or near(best.x[0], hi[0], hi[0] - lo[0]),
        "asymmetry": near(best.x[1], lo[1], hi[1] - lo[1])
        or near(best.x[1], hi[1], hi[1] - lo[1]),
        "n_ex": near(best.x[2], lo[2], hi[2] - lo[2])
        or near(best.x[2], hi[2], hi[2] - lo[2]),
    }
    model = g * (n_s + r * n_i + nex) * quanta_scale
    return FitResult(
        g_sys=g,
        g_sys_db=10.0 * math.log10(g),
        asymmetry=r,
        n_ex=nex,
        n_sys=nex + 0.5,
        residual_rms=float(np.sqrt(np.mean((model - p_meas) ** 2))),
        covariance=cov,
        converged=True,
        at_bound=at_bound,
        start_diagnostics=diagnostics,
        frequency=f_s,
        idler_frequency=f_idler,
    )


@dataclass(frozen=True, eq=False)
class BandFit:
    """Per-frequency fits plus medians over a frequency band."""

    results: list
    failed: list  # (frequency, message) for sweeps whose fit errored
    median_n_sys: float
    median_g_sys_db: float
    median_fsa_true_gain_db: float
    band: tuple


def fit_band(
    sweeps,
    bounds: FitBounds,
    f_idlers,
    band=None,
    rest_of_chain_gain_db: float = 0.0,
) -> BandFit:
    """Fit a list of sweeps and report band medians.

    ``f_idlers`` gives the idler frequency per sweep.  ``band`` is an
    optional (lo, hi) Hz window (for example the 3 dB band of a gain
    profile); medians run over the fitted sweeps whose signal frequency
    falls inside it.  ``rest_of_chain_gain_db`` converts fitted system
    gain into first-stage true gain for the gain median.  Sweeps whose
    fit fails are excluded from the medians and reported in ``failed``.
    """
    sweeps = list(sweeps)
    f_idlers = list(f_idlers)
    if not sweeps:
        raise DomainError("fit_band requires at least one sweep")
    if len(f_idlers) != len(sweeps):
        raise DomainError("need one idler frequency per sweep")
    results, failed = [], []
    for sweep, f_i in zip(sweeps, f_idlers):
        try:
            results.append(fit_noise_sweep(sweep, bounds, f_i))
        except (FitError, DomainError, ValidationError) as exc:
            failed.append((sweep.frequency, str(exc)))
    in_band = [
        r
        for r in results
        if band is None or band[0] <= r.frequency <= band[1]
    ]
    if not in_band:
        raise FitError(
            "no successful fits inside the requested band",
            starts=[{"failed": failed}],
        )
    n_sys = float(np.median([r.n_sys for r in in_band]))
    g_db = float(np.median([r.g_sys_db for r in in_band]))
    return BandFit(
        results=results,
        failed=failed,
        median_n_sys=n_sys,
        median_g_sys_db=g_db,
        median_fsa_true_gain_db=g_db - rest_of_chain_gain_db,
        band=(
            (float(band[0]), float(band[1]))
            if band is not None
            else (
                float(min(r.frequency for r in in_band)),
                float(max(r.frequency for r in in_band)),
            )
        ),
    )


# ---------------------------------------------------------------------------
# File interfaces


def write_sweep_csv(path, sweep: NoiseSweep) -> None:
    """Two-column CSV: voltage_v, power_w (header mandatory)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["voltage_v", "power_w"])
        for v, p in zip(sweep.sntj_voltages, sweep.measured_output):
            writer.writerow([fmt_float(v), fmt_float(p)])


def write_sweep_sidecar(path, sweep: NoiseSweep, f_idler: float) -> None:
    """Sidecar JSON with the acquisition metadata for a sweep CSV."""
    write_json(
        path,
        {
            "frequency_hz": sweep.frequency,
            "idler_frequency_hz": f_idler,
            "rbw_hz": sweep.resolution_bandwidth,
            "temperature_k": sweep.chain_temperature,
        },
    )


def read_sweep(csv_path, sidecar_path=None):
    """Read a sweep CSV plus sidecar; returns (NoiseSweep, f_idler).

    The sidecar defaults to the CSV path with a .json suffix.
    """
    from ._io import read_json

    csv_path = Path(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path.with_suffix(".json")
    sidecar_path = Path(sidecar_path)
    if not sidecar_path.exists():
        raise ParseError(
            f"missing sidecar JSON {sidecar_path.name}", path=str(sidecar_path)
        )
    meta = read_json(sidecar_path)
    missing = [
        k
        for k in ("frequency_hz", "idler_frequency_hz", "rbw_hz", "temperature_k")
        if k not in meta
    ]
    if missing:
        raise ParseError(
            f"sidecar missing keys: {', '.join(missing)}",
            path=str(sidecar_path),
        )
    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["voltage_v", "power_w"]:
            raise ParseError(
                "expected header voltage_v,power_w", path=str(csv_path), line=1
            )
        volts, powers = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(
                    f"expected 2 fields, got {len(row)}",
                    path=str(csv_path),
                    line=lineno,
                )
            try:
                volts.append(float(row[0]))
                powers.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(
                    f"bad numeric field: {exc}", path=str(csv_path), line=lineno
                ) from None
    sweep = NoiseSweep(
        frequency=float(meta["frequency_hz"]),
        sntj_voltages=np.asarray(volts),
        measured_output=np.asarray(powers),
        resolution_bandwidth=float(meta["rbw_hz"]),
        chain_temperature=float(meta["temperature_k"]),
    )
    return sweep, float(meta["idler_frequency_hz"])


def write_fit_json(path, result: FitResult) -> None:
    write_json(path, result.to_dict())
