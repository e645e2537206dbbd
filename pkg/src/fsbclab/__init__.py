"""Numerical laboratory for degraded finite-state broadcast channels.

The package splits into channel construction (channel, specio),
degradedness and state-memory analysis (degradedness), rate-region
computation via support functions (region), and Monte Carlo coding
experiments (simulate).  A compiled extension accelerates the inner
optimization loops when present; set FSBCLAB_PURE=1 to force the
portable numpy backend.
"""

from ._backend import backend_name
from .channel import (
    BlockLaw,
    BsbcFamilySpec,
    DegradingKernel,
    FsbcKernel,
    block_law,
    bsc_matrix,
    build_bsbc_family,
    compose_degraded,
    crossover_compose,
    crossover_residual,
    decode_block,
    encode_block,
    sample_block,
    state_transition_products,
    validate_kernel,
)
from .degradedness import (
    DegradednessReport,
    IndecomposabilityReport,
    PhysicalReport,
    StochasticReport,
    check_indecomposable,
    check_physical_degraded,
    factorization_deviation,
    find_degrading_kernel,
    verify_block_degrading,
)
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    DomainError,
    EmptySupport,
    FsbcError,
    GridMismatch,
    InvalidSpec,
    NegativeEntry,
    NotStochastic,
    RateTooHigh,
    SolverStalled,
    SpecParseError,
    SpecValidationError,
)
from .region import (
    JointInputLaw,
    OptimConfig,
    RatePair,
    RateRegion,
    SupportFunction,
    SupportPoint,
    boundary_from_support,
    grid_search_support,
    intersect_regions,
    lambda_grid,
    optimize_support,
    per_state_regions,
    rate_pair,
    region_from_lines,
    supadditivity_check,
    sweep_support,
    u_cardinality_cap,
)
from .simulate import (
    ErrorStats,
    FanoReport,
    SuperpositionCodebook,
    build_codebook,
    estimate_error,
    exact_error,
    fano_diagnostic,
    message_set_size,
    transmit_and_decode,
)
from .specio import load_channel_spec, save_channel_spec

__version__ = "0.1.0"

__all__ = [
    "BlockLaw",
    "BsbcFamilySpec",
    "BudgetExceeded",
    "DegradednessReport",
    "DegradingKernel",
    "DimensionMismatch",
    "DomainError",
    "EmptySupport",
    "ErrorStats",
    "FanoReport",
    "FsbcError",
    "FsbcKernel",
    "GridMismatch",
    "IndecomposabilityReport",
    "InvalidSpec",
    "JointInputLaw",
    "NegativeEntry",
    "NotStochastic",
    "OptimConfig",
    "PhysicalReport",
    "RatePair",
    "RateRegion",
    "RateTooHigh",
    "SolverStalled",
    "SpecParseError",
    "SpecValidationError",
    "StochasticReport",
    "SuperpositionCodebook",
    "SupportFunction",
    "SupportPoint",
    "backend_name",
    "block_law",
    "boundary_from_support",
    "bsc_matrix",
    "build_bsbc_family",
    "build_codebook",
    "check_indecomposable",
    "check_physical_degraded",
    "compose_degraded",
    "crossover_compose",
    "crossover_residual",
    "decode_block",
    "encode_block",
    "estimate_error",
    "exact_error",
    "factorization_deviation",
    "fano_diagnostic",
    "find_degrading_kernel",
    "grid_search_support",
    "intersect_regions",
    "lambda_grid",
    "load_channel_spec",
    "message_set_size",
    "optimize_support",
    "per_state_regions",
    "rate_pair",
    "region_from_lines",
    "sample_block",
    "save_channel_spec",
    "state_transition_products",
    "supadditivity_check",
    "sweep_support",
    "transmit_and_decode",
    "u_cardinality_cap",
    "validate_kernel",
    "verify_block_degrading",
    "__version__",
]
