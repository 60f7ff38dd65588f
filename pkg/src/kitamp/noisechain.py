"""Cascaded readout-chain noise model in photon-normalized units.

The chain is a three-stage amplifier ladder (parametric first stage,
HEMT second stage, warm amplifier third stage) with a transmission
efficiency ahead of each stage.  Every loss is modeled as a beamsplitter
that mixes the incoming noise with the thermal occupancy of its bath,

    N~ = N_in * eta + N_T (1 - eta),

and the thermal occupancy convention includes the vacuum half-quantum,
N_T = (1/2) coth(h f / 2 k T), so a fully absorbing cold path (eta -> 0
at T = 0) tends to the 0.5-quanta vacuum level.

A parametric first stage mixes the idler input into the signal output:
its output is G~1s (N~in_s + r N~in_i + N~ex) with r the idler/signal
true-gain ratio and the true gain G~1 = G1 * eta_internal (on/off gain
reduced by the amplifier's internal off-state transmission).  Stage 3 is
idealized (eta_3 = 1, no added noise): at that point the signal rides
far above room-temperature thermal noise.

All functions are pure; frequency arguments select the evaluation point
of gains and efficiencies that may be frequency dependent (pass a
callable for those).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import e as _e, h as _h, k as _kb

from .errors import ChainError, DomainError, ValidationError


def _at(value, f: float) -> float:
    """Evaluate a flat value or a frequency-dependent callable at f."""
    return float(value(f)) if callable(value) else float(value)


def thermal_occupancy(f, temperature):
    """Photon thermal occupancy (1/2) coth(h f / 2 k T), in quanta.

    Includes the vacuum half-quantum: exactly 0.5 at T = 0.  Accepts
    scalars or arrays in either argument.
    """
    f_arr = np.asarray(f, dtype=float)
    t_arr = np.asarray(temperature, dtype=float)
    if np.any(f_arr <= 0):
        raise DomainError("frequency must be positive")
    if np.any(t_arr < 0):
        raise DomainError("temperature must be >= 0")
    with np.errstate(divide="ignore", over="ignore"):
        x = _h * f_arr / (2.0 * _kb * t_arr)
        out = np.where(t_arr > 0, 0.5 / np.tanh(np.where(x > 0, x, 1.0)), 0.5)
    if np.isscalar(f) and np.isscalar(temperature):
        return float(out)
    return out


def sntj_noise(v_bias, f, temperature):
    """Shot-noise tunnel junction emission in quanta at frequency f.

    Full expression N = (1/4hf) * sum_± (eV ± hf) coth((eV ± hf)/2kT),
    even in the bias voltage, smooth through V = 0, and tending to the
    asymptote e|V| / (2 h f) once e|V| >> hf, kT.  At V = 0 it reduces
    to the thermal occupancy.
    """
    v_arr = np.asarray(v_bias, dtype=float)
    f_arr = np.asarray(f, dtype=float)
    if np.any(f_arr <= 0):
        raise DomainError("frequency must be positive")
    if temperature < 0:
        raise DomainError("temperature must be >= 0")
    e_plus = _e * v_arr + _h * f_arr
    e_minus = _e * v_arr - _h * f_arr
    if temperature == 0:
        total = np.abs(e_plus) + np.abs(e_minus)
    else:

        def branch(energy):
            x = energy / (2.0 * _kb * temperature)
            # E coth(E/2kT) -> 2kT as E -> 0
            safe = np.where(np.abs(x) > 1e-9, x, 1.0)
            return np.where(
                np.abs(x) > 1e-9,
                energy / np.tanh(safe),
                2.0 * _kb * temperature,
            )

        total = branch(e_plus) + branch(e_minus)
    out = total / (4.0 * _h * f_arr)
    if np.isscalar(v_bias) and np.isscalar(f):
        return float(out)
    return out


def sntj_asymptote(v_bias, f):
    """Large-bias limit e|V| / (2 h f), in quanta."""
    return _e * np.abs(v_bias) / (2.0 * _h * np.asarray(f, dtype=float))


@dataclass(frozen=True)
class Efficiency:
    """Transmission efficiency modeled as a beamsplitter into a bath."""

    eta: object  # float in (0, 1] or callable f -> float
    bath_temperature: float

    def __post_init__(self):
        if not callable(self.eta):
            if not 0.0 < float(self.eta) <= 1.0:
                raise ValidationError(
                    f"eta must lie in (0, 1], got {self.eta}", fields=["eta"]
                )
        if self.bath_temperature < 0:
            raise ValidationError(
                "bath_temperature must be >= 0", fields=["bath_temperature"]
            )

    def eta_at(self, f: float) -> float:
        val = _at(self.eta, f)
        if not 0.0 < val <= 1.0:
            raise DomainError(f"eta({f:.6g} Hz) = {val} outside (0, 1]")
        return val

    def thermal(self, f: float) -> float:
        return thermal_occupancy(f, self.bath_temperature)


@dataclass(frozen=True)
class AmplifierStage:
    """One amplifier: linear power gain, input-referred added noise in
    quanta, and internal transmission efficiency (off-state loss)."""

    gain: object  # float > 0 or callable
    added_noise: object  # float >= 0 or callable
    internal_transmission: object = 1.0  # float in (0, 1] or callable

    def __post_init__(self):
        if not callable(self.gain) and not float(self.gain) > 0:
            raise ValidationError("gain must be positive", fields=["gain"])
        if not callable(self.added_noise) and float(self.added_noise) < 0:
            raise ValidationError(
                "added_noise must be >= 0", fields=["added_noise"]
            )
        if not callable(self.internal_transmission):
            val = float(self.internal_transmission)
            if not 0.0 < val <= 1.0:
                raise ValidationError(
                    "internal_transmission must lie in (0, 1]",
                    fields=["internal_transmission"],
                )

    def gain_at(self, f: float) -> float:
        return _at(self.gain, f)

    def noise_at(self, f: float) -> float:
        return _at(self.added_noise, f)

    def true_gain(self, f: float) -> float:
        """On/off gain reduced by the internal off-state transmission."""
        return _at(self.gain, f) * _at(self.internal_transmission, f)


def beamsplit(n_in: float, eff: Efficiency, f: float) -> float:
    """Noise after a lossy element: N_in eta + N_T (1 - eta)."""
    eta = eff.eta_at(f)
    return n_in * eta + eff.thermal(f) * (1.0 - eta)


def effective_excess_noise(
    eff: Efficiency,
    f_signal: float,
    f_idler: float,
    n_ex_signal: float,
    n_ex_idler: float,
    asymmetry: float,
) -> float:
    """Excess noise of the first stage referred through its input loss.

    N~ex = [Nex_s + N_T(1-eta_s)]/eta_s + r [Nex_i + N_T(1-eta_i)]/eta_i
    with r the idler/signal true-gain ratio.
    """
    if not asymmetry > 0:
        raise DomainError("asymmetry (gain ratio) must be positive")
    eta_s = eff.eta_at(f_signal)
    eta_i = eff.eta_at(f_idler)
    if eta_s == 0 or eta_i == 0:
        raise DomainError("degenerate (zero) transmission efficiency")
    term_s = (n_ex_signal + eff.thermal(f_signal) * (1.0 - eta_s)) / eta_s
    term_i = (n_ex_idler + eff.thermal(f_idler) * (1.0 - eta_i)) / eta_i
    return term_s + asymmetry * term_i


@dataclass(frozen=True)
class ReadoutChain:
    """eta_1, FSA, eta_2, HEMT, eta_3, WAMP in signal-flow order.

    The third stage is idealized by construction: eta_3 must be exactly
    1 and the warm amplifier must add no noise.
    """

    input_loss: Efficiency
    fsa: AmplifierStage
    interstage_loss: Efficiency
    hemt: AmplifierStage
    output_loss: Efficiency
    wamp: AmplifierStage

    def __post_init__(self):
        if callable(self.output_loss.eta) or float(self.output_loss.eta) != 1.0:
            raise ChainError("stage-3 efficiency must be exactly 1")
        if callable(self.wamp.added_noise) or float(self.wamp.added_noise) != 0.0:
            raise ChainError("the warm amplifier must add no noise")

    @classmethod
    def from_stages(cls, stages) -> "ReadoutChain":
        """Build from the ordered alternation [eta1, FSA, eta2, HEMT,
        eta3, WAMP]."""
        stages = list(stages)
        if len(stages) != 6:
            raise ChainError(
                f"chain needs 6 alternating entries, got {len(stages)}"
            )
        expected = (
            Efficiency,
            AmplifierStage,
            Efficiency,
            AmplifierStage,
            Efficiency,
            AmplifierStage,
        )
        for k, (item, want) in enumerate(zip(stages, expected)):
            if not isinstance(item, want):
                raise ChainError(
                    f"chain entry {k} must be {want.__name__}, "
                    f"got {type(item).__name__}"
                )
        return cls(*stages)

    def asymmetry(self, f_signal: float, f_idler: float) -> float:
        """Idler/signal true-gain ratio of the first stage."""
        return self.fsa.true_gain(f_idler) / self.fsa.true_gain(f_signal)

    def hemt_referred_noise(self, f: float) -> float:
        """HEMT noise modified by the preceding loss, at the FSA output
        plane: (N_add,2 + N_T2 (1 - eta_2)) / eta_2."""
        eta2 = self.interstage_loss.eta_at(f)
        return (
            self.hemt.noise_at(f)
            + self.interstage_loss.thermal(f) * (1.0 - eta2)
        ) / eta2

    def system_gain(self, f: float) -> float:
        """G~3 G~2 G~1 (losses folded into each stage's true gain)."""
        g1 = self.fsa.true_gain(f)
        g2 = self.interstage_loss.eta_at(f) * self.hemt.true_gain(f)
        g3 = self.output_loss.eta_at(f) * self.wamp.true_gain(f)
        return g3 * g2 * g1


def chain_output(
    chain: ReadoutChain,
    n_in_signal: float,
    n_in_idler: float,
    f_signal: float,
    f_idler: float,
) -> float:
    """Noise quanta at the analyzer for given chain inputs.

    Full cascade with the HEMT term retained:
    N_out = G~3 G~2 [ G~1s (N~in_s + r N~in_i + N~ex) + N~add,2 ].
    """
    n_s = beamsplit(n_in_signal, chain.input_loss, f_signal)
    n_i = beamsplit(n_in_idler, chain.input_loss, f_idler)
    g1s = chain.fsa.true_gain(f_signal)
    r = chain.asymmetry(f_signal, f_idler)
    n_ex = effective_excess_noise(
        chain.input_loss,
        f_signal,
        f_idler,
        chain.fsa.noise_at(f_signal),
        chain.fsa.noise_at(f_idler),
        r,
    )
    n_out1 = g1s * (n_s + r * n_i + n_ex)
    g2 = chain.interstage_loss.eta_at(f_signal) * chain.hemt.true_gain(f_signal)
    g3 = chain.output_loss.eta_at(f_signal) * chain.wamp.true_gain(f_signal)
    return g3 * g2 * (n_out1 + chain.hemt_referred_noise(f_signal))


#: FSA true gain above which the high-gain/low-HEMT simplification is
#: considered valid (dB).
HIGH_GAIN_THRESHOLD_DB = 16.0


@dataclass(frozen=True)
class SystemNoise:
    """System noise at one frequency: high-gain limit vs exact cascade.

    ``exact_quanta`` exceeds ``limit_quanta`` by exactly the
    input-referred HEMT term.  ``limit_valid`` is False (a warning, not
    an error) when the first-stage true gain sits below the threshold.
    """

    limit_quanta: float
    exact_quanta: float
    hemt_term_quanta: float
    fsa_true_gain_db: float
    limit_valid: bool


def system_noise(
    chain: ReadoutChain,
    f: float,
    threshold_db: float = HIGH_GAIN_THRESHOLD_DB,
) -> SystemNoise:
    """System noise referred to the first-stage input at frequency f.

    In the high-gain/low-HEMT limit N_sys = N_ex,1 + 0.5 (the quantum
    limit plus the first stage's excess noise, taking a symmetric gain
    at this single frequency).  The exact value retains the HEMT term
    N~add,2 / G~1.
    """
    n_ex = chain.fsa.noise_at(f)
    g1 = chain.fsa.true_gain(f)
    hemt_term = chain.hemt_referred_noise(f) / g1
    g1_db = 10.0 * math.log10(g1)
    return SystemNoise(
        limit_quanta=n_ex + 0.5,
        exact_quanta=n_ex + 0.5 + hemt_term,
        hemt_term_quanta=hemt_term,
        fsa_true_gain_db=g1_db,
        limit_valid=g1_db >= threshold_db,
    )


def chain_budget(chain: ReadoutChain, f_signal: float, f_idler: float) -> dict:
    """Per-stage noise contributions referred to the first-stage input."""
    r = chain.asymmetry(f_signal, f_idler)
    n_ex = effective_excess_noise(
        chain.input_loss,
        f_signal,
        f_idler,
        chain.fsa.noise_at(f_signal),
        chain.fsa.noise_at(f_idler),
        r,
    )
    vac_s = beamsplit(0.5, chain.input_loss, f_signal)
    vac_i = beamsplit(0.5, chain.input_loss, f_idler)
    sys = system_noise(chain, f_signal)
    return {
        "frequency_hz": f_signal,
        "idler_frequency_hz": f_idler,
        "asymmetry": r,
        "signal_vacuum_quanta": vac_s,
        "idler_vacuum_quanta": r * vac_i,
        "fsa_excess_quanta": n_ex,
        "hemt_referred_quanta": sys.hemt_term_quanta,
        "fsa_true_gain_db": sys.fsa_true_gain_db,
        "system_gain_db": 10.0 * math.log10(chain.system_gain(f_signal)),
        "nsys_limit_quanta": sys.limit_quanta,
        "nsys_exact_quanta": sys.exact_quanta,
        "limit_valid": sys.limit_valid,
    }
