"""Current-dependent kinetic inductance and wave-mixing coefficients.

The kinetic inductance of a thin superconducting line grows with the
current flowing through it,

    L_k(I) = L_dc * [1 + (I/I*)^2 + (I/I*)^4],

truncated at the quartic term (``TRUNCATION_ORDER``).  Splitting the
total current into a dc bias and an rf pump, I = I_dc + I_p, the
quadratic term yields a three-wave-mixing coefficient ``epsilon`` and a
four-wave-mixing coefficient ``xi``:

    epsilon = 2 I_dc / (I*^2 + I_dc^2)        [1/A]
    xi      = 1 / (I*^2 + I_dc^2)             [1/A^2]

All quantities are SI; unit conversions (pH/sq, dBm, ...) belong at the
boundaries of the toolkit, not here.  Every function in this module is
pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, OperatingPointError, ValidationError

#: Order at which the L_k(I) Taylor series is truncated.  Fixed, not a
#: parameter: higher-order cross terms between I_dc and I_p are not
#: well defined without additional modeling.
TRUNCATION_ORDER = 4


@dataclass(frozen=True)
class FilmSpec:
    """Superconducting film and line parameters.

    Parameters
    ----------
    sheet_inductance : float
        Kinetic inductance per square, H/sq.
    thickness : float
        Film thickness, m.
    line_width : float
        Transmission-line trace width, m.
    i_star : float
        Current scale of the L_k nonlinearity, A.
    i_critical : float
        Line critical current, A.  Physically below ``i_star``.
    """

    sheet_inductance: float
    thickness: float
    line_width: float
    i_star: float
    i_critical: float

    def __post_init__(self):
        bad = [
            name
            for name in (
                "sheet_inductance",
                "thickness",
                "line_width",
                "i_star",
                "i_critical",
            )
            if not getattr(self, name) > 0
        ]
        if bad:
            raise ValidationError(
                f"FilmSpec fields must be strictly positive: {', '.join(bad)}",
                fields=bad,
            )
        if not self.i_critical < self.i_star:
            raise ValidationError(
                f"i_critical ({self.i_critical} A) must be below i_star "
                f"({self.i_star} A)",
                fields=["i_critical"],
            )

    @property
    def inductance_per_length(self) -> float:
        """Per-length inductance of a trace of this film, H/m."""
        return self.sheet_inductance / self.line_width


@dataclass(frozen=True)
class BiasState:
    """Operating currents: dc bias plus rf pump amplitude, A."""

    i_dc: float
    i_pump_amplitude: float = 0.0

    def __post_init__(self):
        if self.i_pump_amplitude < 0:
            raise ValidationError(
                "i_pump_amplitude is an amplitude and must be >= 0",
                fields=["i_pump_amplitude"],
            )


def validate_bias(film: FilmSpec, bias: BiasState) -> None:
    """Check that the bias keeps the line inside its operating regime.

    The device quenches at the critical current, so the instantaneous
    peak |i_dc| + |i_p| must stay below ``film.i_critical``.
    """
    peak = abs(bias.i_dc) + abs(bias.i_pump_amplitude)
    if not peak < film.i_critical:
        raise OperatingPointError(
            f"|i_dc| + |i_pump| = {peak:.6g} A reaches the critical current "
            f"I_c = {film.i_critical:.6g} A"
        )


@dataclass(frozen=True)
class MixingCoefficients:
    """Three- and four-wave-mixing strengths at a dc operating point."""

    epsilon: float  # 1/A
    xi: float  # 1/A^2

    def __post_init__(self):
        if not self.xi > 0:
            raise ValidationError("xi must be strictly positive", fields=["xi"])


def kinetic_inductance(film: FilmSpec, i_total: float) -> float:
    """Kinetic inductance per square at total current ``i_total``.

    Evaluates L_dc * (1 + u^2 + u^4) with u = i_total / I*.  The series
    is only meaningful for |i_total| < I*.

    Raises
    ------
    DomainError
        If |i_total| >= I* (series validity bound).
    """
    if not abs(i_total) < film.i_star:
        raise DomainError(
            f"|i_total| = {abs(i_total):.6g} A is outside the series "
            f"validity bound I* = {film.i_star:.6g} A"
        )
    u2 = (i_total / film.i_star) ** 2
    return film.sheet_inductance * (1.0 + u2 + u2 * u2)


def kinetic_inductance_derivative(film: FilmSpec, i_total: float) -> float:
    """d L_k / dI at the fixed quartic truncation, H/(sq*A)."""
    if not abs(i_total) < film.i_star:
        raise DomainError(
            f"|i_total| = {abs(i_total):.6g} A is outside the series "
            f"validity bound I* = {film.i_star:.6g} A"
        )
    u = i_total / film.i_star
    return film.sheet_inductance * (2.0 * u + 4.0 * u**3) / film.i_star


def mixing_coefficients(film: FilmSpec, i_dc: float) -> MixingCoefficients:
    """Three- and four-wave-mixing coefficients at dc bias ``i_dc``.

    epsilon is odd in ``i_dc`` and vanishes at zero bias (no three-wave
    mixing without a dc current); xi is even and always positive.

    Raises
    ------
    OperatingPointError
        If |i_dc| >= film.i_critical.
    """
    if not abs(i_dc) < film.i_critical:
        raise OperatingPointError(
            f"|i_dc| = {abs(i_dc):.6g} A reaches the critical current "
            f"I_c = {film.i_critical:.6g} A"
        )
    denom = film.i_star**2 + i_dc**2
    return MixingCoefficients(epsilon=2.0 * i_dc / denom, xi=1.0 / denom)


def pump_amplitude_from_power(power_dbm: float, z0: float = 50.0) -> float:
    """Peak pump current for a given power into a matched ``z0`` load.

    Uses P = I^2 Z0 / 2, i.e. I = sqrt(2 P / Z0).
    """
    p_watt = 1e-3 * 10.0 ** (power_dbm / 10.0)
    return math.sqrt(2.0 * p_watt / z0)


def pump_power_from_amplitude(i_pump: float, z0: float = 50.0) -> float:
    """Inverse of :func:`pump_amplitude_from_power`, in dBm."""
    if not i_pump > 0:
        raise DomainError("pump amplitude must be positive to express in dBm")
    p_watt = i_pump**2 * z0 / 2.0
    return 10.0 * math.log10(p_watt / 1e-3)
