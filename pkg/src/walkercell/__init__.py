"""Spectral toolkit for convection and zonal-cell transitions in a
rotating periodic channel: linear stability with closed-form marginal
curves, nonlinear time integration, transition-number classification,
forced-state continuation, and flow-pattern topology.
"""

__version__ = "0.1.0"

from .params import (
    ConfigError,
    NondimParams,
    ParameterError,
    PhysicalParams,
    buoyancy_weight,
    nondimensionalize,
)
from .field import (
    Grid,
    PhysicalFields,
    SpectralState,
    inner,
    norm,
    shift_zonal,
    to_physical,
    to_spectral,
    vertical_integral_u1,
)
from .linstab import (
    CriticalPoint0,
    EigenPair,
    critical_eigenpair,
    critical_rayleigh,
    eigen_spectrum,
    marginal_curve,
    marginal_rayleigh,
    verify_pes,
)
from .dynamics import (
    BlowUpError,
    RunConfig,
    Trajectory,
    advect,
    integrate,
    random_state,
    step,
    tendency,
)
from .transition import (
    ReducedModel,
    TransitionReport,
    classify,
    normal_form_oracle,
    predict_branch,
    reduced_model,
    transition_number,
)
from .continuation import (
    Branch,
    BasicState,
    ContinuationError,
    ForcingProfile,
    arclength_continue,
    basic_state,
    continue_branch,
    cosine_forcing,
    critical_rayleigh_forced,
    detect_hopf,
    heat_source,
    periodic_amplitude_fit,
    perturbed_spectrum,
)
from .topology import (
    PatternReport,
    StabilityReport,
    classify_pattern,
    find_critical_points,
    structural_stability_check,
)

__all__ = [
    "__version__",
    "ConfigError", "NondimParams", "ParameterError", "PhysicalParams",
    "buoyancy_weight", "nondimensionalize",
    "Grid", "PhysicalFields", "SpectralState", "inner", "norm",
    "shift_zonal", "to_physical", "to_spectral", "vertical_integral_u1",
    "CriticalPoint0", "EigenPair", "critical_eigenpair", "critical_rayleigh",
    "eigen_spectrum", "marginal_curve", "marginal_rayleigh", "verify_pes",
    "BlowUpError", "RunConfig", "Trajectory", "advect", "integrate",
    "random_state", "step", "tendency",
    "ReducedModel", "TransitionReport", "classify", "normal_form_oracle",
    "predict_branch", "reduced_model", "transition_number",
    "Branch", "BasicState", "ContinuationError", "ForcingProfile",
    "arclength_continue", "basic_state", "continue_branch", "cosine_forcing",
    "critical_rayleigh_forced", "detect_hopf", "heat_source",
    "periodic_amplitude_fit", "perturbed_spectrum",
    "PatternReport", "StabilityReport", "classify_pattern",
    "find_critical_points", "structural_stability_check",
]
