"""Dispersive qubit readout through a driven nonlinear (Kerr) resonator.

Three engines over one parameter language:

- an analytic reduced-qubit model (pointer fields, shifted frequencies,
  measurement-induced dephasing, steady-state spectra),
- a self-consistent field solver (pointer states, stability and
  bifurcation thresholds, response expansions, validity bounds),
- a brute-force Lindblad master-equation engine on the truncated
  qubit x Fock space (adaptive integrator and an algebraic
  beat-periodic steady-state solver).

All public frequencies, amplitudes, and rates are in MHz (cycles).
"""

from .config import RunConfig, load_config
from .errors import (
    AmbiguousBranchError,
    ConfigError,
    CutoffError,
    CutoffWarning,
    KerrQEDError,
    ModelBreakdownWarning,
    ResonanceError,
    SolverError,
    SteadinessWarning,
    StraddlingWarning,
    WeakProbeWarning,
)
from .fields import (
    OMEGA_C,
    PointerSolution,
    PumpBranch,
    ResponseExpansion,
    StabilityDiagram,
    critical_detuning,
    linear_response_fields,
    pulled_resonator_freq,
    pump_branches,
    pump_field_gain,
    pump_thresholds,
    quadratic_response_ratio,
    reduced_detuning,
    response_expansion,
    s_max_curve,
    solve_pointer_pump,
    solve_pointer_spectroscopy,
    solve_pointer_states,
    stability_diagram,
)
from .fitting import LorentzianFit, lorentzian_fit
from .lindblad import (
    DensityState,
    EvolutionResult,
    FloquetResult,
    HilbertConfig,
    LindbladGenerator,
    build_generator,
    coherent_state,
    evolve_to_steady,
    floquet_steady,
    oracle_spectrum,
    steady_state_exact,
    superoperator_matrix,
)
from .model import (
    DriveSpec,
    QubitSpec,
    ResonatorSpec,
    ShiftedSpectrum,
    StarkCoeffs,
    check_straddling,
    lamb_shift_chain,
    shifted_spectrum_at,
    stark_coeffs,
    stark_shifted_freqs,
    to_angular,
    to_nu,
)
from .reduced import (
    ReducedRates,
    SpectrumGrid,
    frequency_shift_curve,
    operating_point,
    power_db,
    quantum_limit_ratio,
    reduced_rates,
    spectrum,
    steady_state_p1,
    variant_coeffs,
)
from .transmon import build_transmon, fit_transmon, transmon_spectrum

__version__ = "0.1.0"

__all__ = [
    "AmbiguousBranchError",
    "ConfigError",
    "CutoffError",
    "CutoffWarning",
    "DensityState",
    "DriveSpec",
    "EvolutionResult",
    "FloquetResult",
    "HilbertConfig",
    "KerrQEDError",
    "LindbladGenerator",
    "LorentzianFit",
    "ModelBreakdownWarning",
    "OMEGA_C",
    "PointerSolution",
    "PumpBranch",
    "QubitSpec",
    "ReducedRates",
    "ResonanceError",
    "ResonatorSpec",
    "ResponseExpansion",
    "RunConfig",
    "ShiftedSpectrum",
    "SolverError",
    "SpectrumGrid",
    "StabilityDiagram",
    "StarkCoeffs",
    "SteadinessWarning",
    "StraddlingWarning",
    "WeakProbeWarning",
    "build_generator",
    "build_transmon",
    "check_straddling",
    "coherent_state",
    "critical_detuning",
    "evolve_to_steady",
    "fit_transmon",
    "floquet_steady",
    "frequency_shift_curve",
    "lamb_shift_chain",
    "linear_response_fields",
    "load_config",
    "lorentzian_fit",
    "operating_point",
    "oracle_spectrum",
    "power_db",
    "pulled_resonator_freq",
    "pump_branches",
    "pump_field_gain",
    "pump_thresholds",
    "quadratic_response_ratio",
    "quantum_limit_ratio",
    "reduced_detuning",
    "reduced_rates",
    "response_expansion",
    "s_max_curve",
    "shifted_spectrum_at",
    "solve_pointer_pump",
    "solve_pointer_spectroscopy",
    "solve_pointer_states",
    "spectrum",
    "stability_diagram",
    "stark_coeffs",
    "stark_shifted_freqs",
    "steady_state_exact",
    "steady_state_p1",
    "superoperator_matrix",
    "to_angular",
    "to_nu",
    "transmon_spectrum",
    "variant_coeffs",
]
