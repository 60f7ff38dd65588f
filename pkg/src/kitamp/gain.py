"""Three-wave-mixing parametric gain of the dispersion-engineered medium.

Coupled-mode equations
----------------------
A pump photon at f_p converts into a signal photon at f_s and an idler
photon at f_i = f_p - f_s.  With complex current envelopes A_m(z) (in
amperes) defined against smooth carriers exp(i(w_m t - kbar_m z)), the
solver integrates

    dAp/dz = -i (kbar_p xi/8) (|Ap|^2 + 2|As|^2 + 2|Ai|^2) Ap
             - i (kbar_p eps/4) As Ai exp(+i dk z)
    dAs/dz = -i (kbar_s xi/8) (|As|^2 + 2|Ap|^2 + 2|Ai|^2) As
             - i (kbar_s eps/4) Ap conj(Ai) exp(-i dk z)
    dAi/dz = -i (kbar_i xi/8) (|Ai|^2 + 2|Ap|^2 + 2|As|^2) Ai
             - i (kbar_i eps/4) Ap conj(As) exp(-i dk z)

with eps, xi the mixing coefficients of the film at the dc bias,
kbar_m = w_m * sbar the wavenumbers of the length-averaged (smooth)
line, and dk = k(f_p) - k(f_s) - k(f_i) the linear phase mismatch read
off the engineered Bloch dispersion.  Splitting the wavenumber this way
puts all of the loading-induced dispersion into dk while the coupling
prefactors stay proportional to w_m, so the equations conserve the
photon fluxes |A_m|^2 / w_m exactly (Manley-Rowe); any residual drift
in a solution measures integrator error only.

In the phase-matched, undepleted-pump limit with phase modulation
disabled the system linearizes to signal power gain cosh^2(g L) with
g = (eps |Ap| / 4) sqrt(kbar_s kbar_i), which is the analytic benchmark
used by the tests.

All solver entry points are pure functions of their inputs; sweeps over
signal frequency are independent per point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ._io import fmt_float, write_json
from .errors import (
    DomainError,
    IntegrationError,
    NumericalError,
    ProfileShapeError,
    StopbandError,
    ValidationError,
)
from .network import (
    BlochDispersion,
    FrequencyGrid,
    SupercellSpec,
    bloch_dispersion,
    mean_slowness,
    supercell_unit,
)
from .nonlinearity import (
    BiasState,
    FilmSpec,
    mixing_coefficients,
    pump_amplitude_from_power,
    validate_bias,
)


@dataclass(frozen=True)
class PumpSpec:
    """Pump tone: frequency in Hz and current amplitude in A."""

    frequency: float
    current_amplitude: float

    def __post_init__(self):
        bad = []
        if not self.frequency > 0:
            bad.append("frequency")
        if not self.current_amplitude >= 0:
            bad.append("current_amplitude")
        if bad:
            raise ValidationError(f"invalid PumpSpec: {', '.join(bad)}", fields=bad)

    @classmethod
    def from_power_dbm(
        cls, frequency: float, power_dbm: float, z0: float = 50.0
    ) -> "PumpSpec":
        """Pump amplitude for a given power in a matched z0 embedding."""
        return cls(frequency, pump_amplitude_from_power(power_dbm, z0))


@dataclass(frozen=True)
class AmplifierMedium:
    """The nonlinear line: film, periodic loading, and dc operating point."""

    film: FilmSpec
    supercell: SupercellSpec
    bias: BiasState

    def __post_init__(self):
        validate_bias(self.film, self.bias)

    @property
    def length(self) -> float:
        return self.supercell.total_length


def medium_dispersion(
    medium: AmplifierMedium, f_max: float, n_points: int = 4001
) -> BlochDispersion:
    """Bloch dispersion of the medium on a dense internal grid."""
    grid = FrequencyGrid.linear(f_max / n_points, f_max, n_points)
    unit = supercell_unit(medium.supercell, medium.film, grid)
    return bloch_dispersion(unit, medium.supercell.supercell_length)


def default_pump_frequency(
    dispersion: BlochDispersion, edge_fraction: float = 0.985
) -> float:
    """Default pump placement: just below the first stopband edge.

    This is a toolkit default, not a measured operating point; callers
    with a known pump frequency should pass it explicitly.
    """
    bands = dispersion.stopband_intervals()
    if not bands:
        raise DomainError(
            "dispersion has no stopband below the grid maximum; "
            "cannot place a pump by default"
        )
    return bands[0][0] * edge_fraction


def phase_mismatch(
    dispersion: BlochDispersion, f_pump: float, f_signal: float
) -> float:
    """Linear mismatch dk = k(f_p) - k(f_s) - k(f_i) in rad/m.

    Wavenumbers interpolate linearly between dispersion grid points.
    Raises StopbandError naming the first of the three frequencies that
    falls inside a stopband.
    """
    if not 0.0 < f_signal < f_pump:
        raise DomainError(
            f"need 0 < f_signal < f_pump, got f_signal = {f_signal:.6g}, "
            f"f_pump = {f_pump:.6g}"
        )
    f_idler = f_pump - f_signal
    for label, f in (("pump", f_pump), ("signal", f_signal), ("idler", f_idler)):
        if dispersion.is_in_stopband(f):
            raise StopbandError(
                f"{label} frequency {f:.6g} Hz lies inside a stopband"
            )
    k = dispersion.interpolate
    return (k(f_pump) - k(f_signal) - k(f_idler)).real


@dataclass(frozen=True, eq=False)
class CmeSolution:
    """Envelope amplitudes along the medium for one signal frequency."""

    positions: np.ndarray
    a_signal: np.ndarray
    a_idler: np.ndarray
    a_pump: np.ndarray
    f_signal: float
    f_idler: float
    f_pump: float

    @property
    def on_off_gain_db(self) -> float:
        return 10.0 * math.log10(
            abs(self.a_signal[-1]) ** 2 / abs(self.a_signal[0]) ** 2
        )


def photon_flux_drift(sol: CmeSolution) -> float:
    """Worst relative drift of the Manley-Rowe invariants along z.

    Photon fluxes are |A_m|^2 / w_m; the conserved combinations are
    (signal - idler) and (signal + pump).  Returns the maximum deviation
    from the z = 0 values, normalized by the total initial flux.
    """
    fs = np.abs(sol.a_signal) ** 2 / sol.f_signal
    fi = np.abs(sol.a_idler) ** 2 / sol.f_idler
    fp = np.abs(sol.a_pump) ** 2 / sol.f_pump
    total0 = fs[0] + fi[0] + fp[0]
    c1 = fs - fi
    c2 = fs + fp
    drift = max(
        float(np.max(np.abs(c1 - c1[0]))), float(np.max(np.abs(c2 - c2[0])))
    )
    return drift / total0


def solve_3wm(
    medium: AmplifierMedium,
    pump: PumpSpec,
    f_signal: float,
    dispersion: BlochDispersion | None = None,
    signal_amplitude: float | None = None,
    undepleted: bool = False,
    include_phase_modulation: bool = True,
    rtol: float = 1e-8,
) -> CmeSolution:
    """Integrate the three-wave-mixing envelopes over the medium.

    Parameters
    ----------
    dispersion : BlochDispersion, optional
        Precomputed dispersion; built on the fly when omitted (pass one
        when sweeping many signal frequencies).
    signal_amplitude : float, optional
        Input signal current; defaults to 1e-3 of the pump amplitude
        (deep small-signal regime).
    undepleted : bool
        Freeze the pump envelope (linearized benchmark mode).
    include_phase_modulation : bool
        Include the xi-driven self/cross phase-modulation terms.
    rtol : float
        Relative tolerance of the adaptive integrator; envelopes are
        reported on a one-point-per-supercell grid.
    """
    film, bias = medium.film, medium.bias
    peak = abs(bias.i_dc) + pump.current_amplitude
    if not peak < film.i_critical:
        raise DomainError(
            f"|i_dc| + i_pump = {peak:.6g} A reaches the critical current "
            f"I_c = {film.i_critical:.6g} A"
        )
    if dispersion is None:
        dispersion = medium_dispersion(medium, 1.25 * pump.frequency)
    dk = phase_mismatch(dispersion, pump.frequency, f_signal)
    f_idler = pump.frequency - f_signal

    coeffs = mixing_coefficients(film, bias.i_dc)
    eps, xi = coeffs.epsilon, coeffs.xi
    if not include_phase_modulation:
        xi = 0.0
    sbar = mean_slowness(medium.supercell, film)
    kb_s = 2.0 * math.pi * f_signal * sbar
    kb_i = 2.0 * math.pi * f_idler * sbar
    kb_p = 2.0 * math.pi * pump.frequency * sbar

    a_s0 = (
        signal_amplitude
        if signal_amplitude is not None
        else max(pump.current_amplitude * 1e-3, 1e-9)
    )
    y0 = np.array([a_s0, 0.0, pump.current_amplitude], dtype=complex)

    def rhs(z, y):
        a_s, a_i, a_p = y
        ph = np.exp(-1j * dk * z)
        ds = -1j * kb_s * (
            xi / 8.0 * (abs(a_s) ** 2 + 2 * abs(a_p) ** 2 + 2 * abs(a_i) ** 2) * a_s
            + eps / 4.0 * a_p * np.conj(a_i) * ph
        )
        di = -1j * kb_i * (
            xi / 8.0 * (abs(a_i) ** 2 + 2 * abs(a_p) ** 2 + 2 * abs(a_s) ** 2) * a_i
            + eps / 4.0 * a_p * np.conj(a_s) * ph
        )
        if undepleted:
            dp = 0.0
        else:
            dp = -1j * kb_p * (
                xi / 8.0 * (abs(a_p) ** 2 + 2 * abs(a_s) ** 2 + 2 * abs(a_i) ** 2) * a_p
                + eps / 4.0 * a_s * a_i / ph
            )
        return [ds, di, dp]

    length = medium.length
    z_out = np.linspace(0.0, length, medium.supercell.n_supercells + 1)
    scale = max(pump.current_amplitude, a_s0)
    result = solve_ivp(
        rhs,
        (0.0, length),
        y0,
        method="DOP853",
        t_eval=z_out,
        rtol=rtol,
        atol=scale * 1e-14,
    )
    if not result.success:
        raise IntegrationError(
            f"coupled-mode integration failed: {result.message}",
            diagnostics={
                "f_signal": f_signal,
                "f_pump": pump.frequency,
                "rtol": rtol,
                "status": result.status,
            },
        )
    return CmeSolution(
        positions=result.t,
        a_signal=result.y[0],
        a_idler=result.y[1],
        a_pump=result.y[2],
        f_signal=f_signal,
        f_idler=f_idler,
        f_pump=pump.frequency,
    )


# ---------------------------------------------------------------------------
# Gain profiles


@dataclass(frozen=True, eq=False)
class GainProfile:
    """On/off gain, off-state transmission, and true gain vs frequency.

    The true gain is the on/off gain reduced by the amplifier's internal
    (off-state) transmission: true = on_off + off_transmission in dB.
    Points flagged ``in_stopband`` carry NaN gain entries.
    """

    grid: FrequencyGrid
    on_off_gain_db: np.ndarray
    off_transmission_db: np.ndarray
    true_gain_db: np.ndarray
    in_stopband: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        for name in ("on_off_gain_db", "off_transmission_db", "true_gain_db"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (n,):
                raise ValidationError(f"{name} must have one value per grid point")
        flags = np.asarray(self.in_stopband, dtype=bool)
        object.__setattr__(self, "in_stopband", flags)
        if flags.shape != (n,):
            raise ValidationError("in_stopband must have one flag per grid point")
        ok = ~flags
        if np.any(self.off_transmission_db[ok] > 1e-12):
            raise ValidationError("off_transmission_db must be <= 0 dB")
        resid = self.true_gain_db[ok] - (
            self.on_off_gain_db[ok] + self.off_transmission_db[ok]
        )
        if resid.size and np.max(np.abs(resid)) > 1e-9:
            raise ValidationError(
                "true_gain_db must equal on_off_gain_db + off_transmission_db"
            )

    @classmethod
    def from_on_off(
        cls,
        grid: FrequencyGrid,
        on_off_gain_db,
        off_transmission_db,
        in_stopband=None,
    ) -> "GainProfile":
        on_off = np.broadcast_to(
            np.asarray(on_off_gain_db, dtype=float), (len(grid),)
        ).copy()
        off = np.broadcast_to(
            np.asarray(off_transmission_db, dtype=float), (len(grid),)
        ).copy()
        flags = (
            np.zeros(len(grid), dtype=bool)
            if in_stopband is None
            else np.asarray(in_stopband, dtype=bool).copy()
        )
        return cls(grid, on_off, off, on_off + off, flags)


def gain_profile(
    medium: AmplifierMedium,
    pump: PumpSpec,
    grid: FrequencyGrid,
    off_transmission_db,
    dispersion: BlochDispersion | None = None,
    rtol: float = 1e-8,
) -> GainProfile:
    """On/off and true gain over a signal-frequency grid.

    ``off_transmission_db`` is the measured or modeled off-state
    transmission in dB (scalar or per grid point).  Frequencies whose
    signal or idler falls in a stopband are flagged and carry no gain
    value rather than an extrapolated one.
    """
    if dispersion is None:
        dispersion = medium_dispersion(medium, 1.25 * pump.frequency)
    off = np.broadcast_to(
        np.asarray(off_transmission_db, dtype=float), (len(grid),)
    ).copy()
    on_off = np.full(len(grid), np.nan)
    flags = np.zeros(len(grid), dtype=bool)
    for j, f in enumerate(grid.points):
        try:
            sol = solve_3wm(
                medium, pump, float(f), dispersion=dispersion, rtol=rtol
            )
        except StopbandError:
            flags[j] = True
            continue
        on_off[j] = sol.on_off_gain_db
    true = np.where(flags, np.nan, on_off + off)
    return GainProfile(grid, on_off, off, true, flags)


@dataclass(frozen=True)
class BandSummary:
    """3 dB band of a gain profile and the medians inside it."""

    f_lo: float
    f_hi: float
    peak_true_gain_db: float
    peak_frequency: float
    median_true_gain_db: float
    median_on_off_gain_db: float

    @property
    def bandwidth(self) -> float:
        return self.f_hi - self.f_lo


def bandwidth_3db(profile: GainProfile) -> BandSummary:
    """Widest contiguous band where true gain >= peak - 3 dB.

    Band edges are linearly interpolated between grid points; medians
    are computed over the grid points inside the band.  Requires the
    profile's maximum to lie strictly inside the grid.
    """
    g = profile.true_gain_db
    f = profile.grid.points
    valid = ~np.isnan(g)
    if not np.any(valid):
        raise ProfileShapeError("profile has no valid gain points")
    peak_idx = int(np.nanargmax(g))
    if peak_idx == 0 or peak_idx == g.size - 1:
        raise ProfileShapeError(
            "gain maximum sits on the grid edge; no interior peak"
        )
    peak = g[peak_idx]
    thresh = peak - 3.0
    above = valid & (g >= thresh)

    # widest contiguous run of in-band points containing a maximum
    runs = []
    j = 0
    while j < above.size:
        if above[j]:
            j0 = j
            while j + 1 < above.size and above[j + 1]:
                j += 1
            runs.append((j0, j))
        j += 1
    lo_idx, hi_idx = max(runs, key=lambda r: r[1] - r[0])

    def cross(i_out, i_in):
        g0, g1 = g[i_out], g[i_in]
        if np.isnan(g0) or g1 == g0:
            return f[i_in]
        w = (thresh - g0) / (g1 - g0)
        return f[i_out] + w * (f[i_in] - f[i_out])

    f_lo = f[0] if lo_idx == 0 else cross(lo_idx - 1, lo_idx)
    f_hi = f[-1] if hi_idx == g.size - 1 else cross(hi_idx + 1, hi_idx)
    inside = slice(lo_idx, hi_idx + 1)
    return BandSummary(
        f_lo=float(f_lo),
        f_hi=float(f_hi),
        peak_true_gain_db=float(peak),
        peak_frequency=float(f[peak_idx]),
        median_true_gain_db=float(np.median(g[inside])),
        median_on_off_gain_db=float(np.median(profile.on_off_gain_db[inside])),
    )


def tune_pump_amplitude(
    medium: AmplifierMedium,
    f_pump: float,
    signal_grid: FrequencyGrid,
    target_peak_db: float = 21.0,
    tol_db: float = 0.1,
    dispersion: BlochDispersion | None = None,
    max_iter: int = 40,
    rtol: float = 1e-8,
) -> float:
    """Pump amplitude reaching a target peak gain, found by bisection.

    Peak gain over the signal grid grows monotonically with pump
    amplitude in the operating regime, so bisection between zero drive
    and the critical-current headroom converges unconditionally.
    """
    if dispersion is None:
        dispersion = medium_dispersion(medium, 1.25 * f_pump)

    def peak_gain(amplitude: float) -> float:
        pump = PumpSpec(f_pump, amplitude)
        best = -math.inf
        for f in signal_grid.points:
            try:
                sol = solve_3wm(
                    medium, pump, float(f), dispersion=dispersion, rtol=rtol
                )
            except StopbandError:
                continue
            best = max(best, sol.on_off_gain_db)
        if best == -math.inf:
            raise DomainError("every probe frequency fell in a stopband")
        return best

    hi = 0.98 * (medium.film.i_critical - abs(medium.bias.i_dc))
    lo = hi * 1e-3
    g_hi = peak_gain(hi)
    if g_hi < target_peak_db:
        raise NumericalError(
            f"target peak gain {target_peak_db} dB unreachable below the "
            f"critical current (max {g_hi:.2f} dB)"
        )
    if peak_gain(lo) > target_peak_db:
        raise NumericalError("target peak gain already exceeded at minimal drive")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g = peak_gain(mid)
        if abs(g - target_peak_db) < tol_db:
            return mid
        if g < target_peak_db:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# File emission


def write_gain_csv(path, profile: GainProfile) -> None:
    """CSV columns: frequency_hz, on_off_db, off_transmission_db, true_gain_db."""
    import csv
    from pathlib import Path

    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["frequency_hz", "on_off_db", "off_transmission_db", "true_gain_db"]
        )
        for j, f in enumerate(profile.grid.points):
            writer.writerow(
                [
                    fmt_float(f),
                    fmt_float(profile.on_off_gain_db[j]),
                    fmt_float(profile.off_transmission_db[j]),
                    fmt_float(profile.true_gain_db[j]),
                ]
            )


def read_gain_csv(path) -> GainProfile:
    """Inverse of :func:`write_gain_csv`; NaN rows become stopband flags."""
    import csv
    from pathlib import Path

    from .errors import ParseError

    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != [
            "frequency_hz",
            "on_off_db",
            "off_transmission_db",
            "true_gain_db",
        ]:
            raise ParseError(
                "unexpected gain CSV header", path=str(path), line=1
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise ParseError(
                    f"bad numeric field: {exc}", path=str(path), line=lineno
                ) from None
    if not rows:
        raise ParseError("gain CSV contains no data rows", path=str(path))
    arr = np.asarray(rows)
    flags = np.isnan(arr[:, 1])
    return GainProfile(
        grid=FrequencyGrid(arr[:, 0]),
        on_off_gain_db=arr[:, 1],
        off_transmission_db=arr[:, 2],
        true_gain_db=arr[:, 3],
        in_stopband=flags,
    )


def write_gain_summary(path, profile: GainProfile) -> dict:
    """JSON summary: peak, 3 dB band edges, in-band medians."""
    band = bandwidth_3db(profile)
    summary = {
        "peak_true_gain_db": band.peak_true_gain_db,
        "peak_frequency_hz": band.peak_frequency,
        "band_lo_hz": band.f_lo,
        "band_hi_hz": band.f_hi,
        "bandwidth_hz": band.bandwidth,
        "median_true_gain_db": band.median_true_gain_db,
        "median_on_off_gain_db": band.median_on_off_gain_db,
    }
    write_json(path, summary)
    return summary
