"""harness-lab: a numerical laboratory for a discrete-time averaging
surface-growth process on the integer lattice.

The library computes the model's exact lattice objects (step laws,
convolution powers, the symmetrized difference kernel), its analytic
limit objects (potential kernel, stationary increment covariance,
spectral density, the limiting Gaussian field covariance), and runs
seeded Monte Carlo experiments that verify the scaling behaviour at
desk scale.
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceeded,
    ConfigParseError,
    DegenerateSupport,
    HarnessLabError,
    IncompleteParams,
    MassNotOne,
    MeanNotZero,
    NegativeWeight,
    QuadratureFailure,
    SeriesBudgetExceeded,
    SpanNotOne,
    SpecMismatch,
    TableTooSmall,
    TruncationTooCoarse,
    UnknownKind,
    ValidationError,
    WindowTooLarge,
    WindowTooSmall,
)
from .lattice import (
    LatticeDistribution,
    WeightVector,
    as_distribution,
    char_function,
    convolve,
    iter_powers,
    parse_weights,
    q_decay_supremum,
    q_kernel,
    transition_power,
    validate_weights,
)
from .noise import NoiseRealization, NoiseSpec, batch_rows, derive_seed
from .simulate import (
    FieldWindow,
    constant_window,
    coupling_decay,
    dual_representation,
    evolve,
    evolve_block_reads,
    hydrodynamic_profile_error,
    increment_evolve,
    read_plan,
    window_from_function,
)
from .potential import (
    DecayFit,
    Pi0Sampler,
    PotentialTable,
    cov0,
    cov0_series_total,
    fit_covariance_decay,
    potential_kernel,
    sample_pi0,
    shared_table,
    spectral_density,
)
from .limit_law import (
    LimitSpec,
    SpaceTimePoint,
    covariance_matrix,
    fbm_covariance,
    gamma1,
    gamma1_integral,
    gamma2,
    gamma2_integral,
    psi,
    z_covariance,
)
from .fluctuation import (
    CovariancePair,
    FluctuationSample,
    ScalingExponents,
    Scenario,
    decompose_fluctuation,
    fluctuation_matrix,
    fluctuation_samples,
    increment_cov_sum_estimate,
    increment_sampler,
    limit_covariance_report,
    limit_spec_for,
    scaling_exponents,
    scenario_init,
)
from .lclt import (
    ErrorProfile,
    char_bound_coefficient,
    erfc_sandwich,
    gaussian_transition,
    green_limit,
    green_sum_convergence,
    lclt_error_profile,
    profile_to_csv,
)

__all__ = [
    "__version__",
    "BudgetExceeded",
    "ConfigParseError",
    "DegenerateSupport",
    "HarnessLabError",
    "IncompleteParams",
    "LatticeDistribution",
    "MassNotOne",
    "MeanNotZero",
    "NegativeWeight",
    "NoiseRealization",
    "NoiseSpec",
    "QuadratureFailure",
    "SeriesBudgetExceeded",
    "SpanNotOne",
    "SpecMismatch",
    "TableTooSmall",
    "TruncationTooCoarse",
    "UnknownKind",
    "ValidationError",
    "WeightVector",
    "WindowTooLarge",
    "WindowTooSmall",
    "CovariancePair",
    "DecayFit",
    "ErrorProfile",
    "FieldWindow",
    "FluctuationSample",
    "LimitSpec",
    "Pi0Sampler",
    "PotentialTable",
    "ScalingExponents",
    "Scenario",
    "SpaceTimePoint",
    "as_distribution",
    "batch_rows",
    "char_bound_coefficient",
    "char_function",
    "constant_window",
    "convolve",
    "coupling_decay",
    "cov0",
    "cov0_series_total",
    "covariance_matrix",
    "decompose_fluctuation",
    "derive_seed",
    "dual_representation",
    "erfc_sandwich",
    "evolve",
    "evolve_block_reads",
    "fbm_covariance",
    "fit_covariance_decay",
    "fluctuation_matrix",
    "fluctuation_samples",
    "gamma1",
    "gamma1_integral",
    "gamma2",
    "gamma2_integral",
    "gaussian_transition",
    "green_limit",
    "green_sum_convergence",
    "hydrodynamic_profile_error",
    "increment_cov_sum_estimate",
    "increment_evolve",
    "increment_sampler",
    "iter_powers",
    "lclt_error_profile",
    "limit_covariance_report",
    "limit_spec_for",
    "parse_weights",
    "potential_kernel",
    "profile_to_csv",
    "psi",
    "q_decay_supremum",
    "q_kernel",
    "read_plan",
    "sample_pi0",
    "scaling_exponents",
    "scenario_init",
    "shared_table",
    "spectral_density",
    "transition_power",
    "validate_weights",
    "window_from_function",
    "z_covariance",
]
