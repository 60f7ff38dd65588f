"""kitamp: kinetic-inductance traveling-wave amplifier design toolkit.

Subpackages by concern:

* :mod:`kitamp.nonlinearity` -- current-dependent kinetic inductance and
  three/four-wave-mixing coefficients.
* :mod:`kitamp.network` -- ABCD/S-parameter engine, supercell Bloch
  dispersion, directional coupler and bias tee circuit models.
* :mod:`kitamp.touchstone` -- Touchstone v1 and CSV import/export.
* :mod:`kitamp.gain` -- three-wave-mixing coupled-mode solver, gain
  profiles, and 3 dB band analysis.
* :mod:`kitamp.noisechain` -- cascaded readout-chain noise model.
* :mod:`kitamp.calfit` -- shot-noise calibration sweeps and bounded fits.
* :mod:`kitamp.cli` -- batch command-line front end.
"""

from .nonlinearity import (
    BiasState,
    FilmSpec,
    MixingCoefficients,
    kinetic_inductance,
    kinetic_inductance_derivative,
    mixing_coefficients,
    pump_amplitude_from_power,
    pump_power_from_amplitude,
)
from .network import (
    BiasTeeSpec,
    BlochDispersion,
    CouplerSpec,
    FrequencyGrid,
    LineSection,
    NPortSParams,
    SupercellSpec,
    TwoPortChain,
    abcd_to_sparams,
    bias_tee_sparams,
    bloch_dispersion,
    cascade,
    chain_power,
    coupler_metrics,
    coupler_sparams,
    dc_branch_resonances,
    line_abcd,
    sparams_to_abcd,
    supercell_chain,
    supercell_unit,
)
from .gain import (
    AmplifierMedium,
    BandSummary,
    CmeSolution,
    GainProfile,
    PumpSpec,
    bandwidth_3db,
    default_pump_frequency,
    gain_profile,
    medium_dispersion,
    phase_mismatch,
    photon_flux_drift,
    solve_3wm,
    tune_pump_amplitude,
)
from .noisechain import (
    AmplifierStage,
    Efficiency,
    ReadoutChain,
    SystemNoise,
    beamsplit,
    chain_budget,
    chain_output,
    effective_excess_noise,
    sntj_noise,
    system_noise,
    thermal_occupancy,
)
from .calfit import (
    BandFit,
    FitBounds,
    FitResult,
    NoiseSweep,
    SyntheticSpec,
    fit_band,
    fit_noise_sweep,
    model_output,
    synthesize_sweep,
)

__version__ = "0.1.0"
