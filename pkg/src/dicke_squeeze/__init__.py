"""Collective spin squeezing from phonon-mediated twisting.

Permutation-invariant Lindblad dynamics on the Dicke block decomposition,
the linearized moment system with its analytic optimum and asymptotic
squeezing floor, a truncated cavity-phonon-spin reference model, and
deterministic scan/fit/optimization drivers.
"""

from .dicke import (
    BlockLayout,
    block_degeneracy,
    build_collective_ops,
    css_state,
    dicke_block_structure,
)
from .dynamics import (
    BlockDensityMatrix,
    Trajectory,
    brute_force_evolve,
    build_liouvillian,
    collective_moments,
    evolve,
    evolve_unitary,
    squeezing_of_state,
    trace_distance,
)
from .errors import (
    BoundaryWarning,
    ConfigError,
    ConvergenceError,
    CutoffWarning,
    DegenerateSpinError,
    DomainError,
    EngineError,
    EngineWarning,
    FitDivergenceError,
    IntegratorError,
    NonUnimodalWarning,
    PositivityWarning,
    RegimeError,
    RegimeWarning,
    ResourceError,
    SchemeError,
    SingularMatrixError,
)
from .experiments import (
    FitResult,
    OmegaROptimum,
    OptimizedScan,
    ScanConfig,
    asymptote_report,
    fit_power_law,
    locate_minimum,
    optimize_omega_r,
    optimize_scan,
    scan_N_fit,
    scan_time,
    scan_time_csv,
)
from .full_model import (
    ComparisonReport,
    MeanField,
    build_linearized_hamiltonian,
    mean_field_steady_state,
    verify_effective_reduction,
    with_mean_field_couplings,
)
from .hamiltonian import (
    SpinHamiltonian,
    build_bogoliubov_operator,
    build_jump_operator,
    build_spin_hamiltonian,
)
from .metrics import (
    HusimiField,
    MinimumResult,
    SqueezingRecord,
    find_minimum,
    husimi_q,
    squeezing_parameter,
)
from .moments import (
    AnalyticOptimum,
    MomentSystem,
    analytic_optimum,
    asymptotic_bound,
    bound_from_epsilon,
    build_moment_system,
    closed_form_moments,
    solve_moments,
)
from .params import (
    DerivedParams,
    RawParams,
    Scheme,
    classify_scheme,
    collective_epsilon,
    derive_chain,
    load_params,
    raw_params_from_dict,
    squeeze_knob_from_linearized,
    thermal_occupation,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticOptimum",
    "BlockDensityMatrix",
    "BlockLayout",
    "BoundaryWarning",
    "ComparisonReport",
    "ConfigError",
    "ConvergenceError",
    "CutoffWarning",
    "DegenerateSpinError",
    "DerivedParams",
    "DomainError",
    "EngineError",
    "EngineWarning",
    "FitDivergenceError",
    "FitResult",
    "HusimiField",
    "IntegratorError",
    "MeanField",
    "MinimumResult",
    "MomentSystem",
    "NonUnimodalWarning",
    "OmegaROptimum",
    "OptimizedScan",
    "PositivityWarning",
    "RawParams",
    "RegimeError",
    "RegimeWarning",
    "ResourceError",
    "ScanConfig",
    "Scheme",
    "SchemeError",
    "SingularMatrixError",
    "SpinHamiltonian",
    "SqueezingRecord",
    "Trajectory",
    "analytic_optimum",
    "asymptote_report",
    "asymptotic_bound",
    "block_degeneracy",
    "bound_from_epsilon",
    "brute_force_evolve",
    "build_bogoliubov_operator",
    "build_collective_ops",
    "build_jump_operator",
    "build_linearized_hamiltonian",
    "build_liouvillian",
    "build_moment_system",
    "build_spin_hamiltonian",
    "classify_scheme",
    "closed_form_moments",
    "collective_epsilon",
    "collective_moments",
    "css_state",
    "derive_chain",
    "dicke_block_structure",
    "evolve",
    "evolve_unitary",
    "find_minimum",
    "fit_power_law",
    "husimi_q",
    "load_params",
    "locate_minimum",
    "mean_field_steady_state",
    "optimize_omega_r",
    "optimize_scan",
    "raw_params_from_dict",
    "scan_N_fit",
    "scan_time",
    "scan_time_csv",
    "solve_moments",
    "squeeze_knob_from_linearized",
    "squeezing_of_state",
    "squeezing_parameter",
    "thermal_occupation",
    "trace_distance",
    "verify_effective_reduction",
    "with_mean_field_couplings",
]
