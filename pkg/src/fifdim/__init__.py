"""Generalized affine fractal interpolation functions with variable
vertical scaling, and rigorous estimates of the box dimension of their
graphs via sum-function bounds, scaling-matrix spectral radii, and direct
box counting."""

__version__ = "0.1.0"

from .analysis import (
    IntervalBound,
    VariationEstimate,
    ZeroCount,
    count_zeros,
    interval_extrema,
    interval_extrema_abs,
    lipschitz_bound,
    total_variation,
    variation_upper,
)
from .dimension import (
    Bound,
    BoxCountResult,
    DimensionVerdict,
    assemble_verdict,
    boxcount_dimension,
    dim_bounds_gamma,
    dim_bounds_rho,
)
from .engine import EngineBounds, GridValues, engine_bounds, grid_values, sample_graph
from .errors import (
    CapacityError,
    ExpressionError,
    FifdimError,
    InsufficientResolutionError,
    InternalInconsistencyError,
    ModelValidationError,
)
from .expressions import ExprFunction, parse_expr, piecewise_linear
from .matrices import (
    PatternClass,
    RadiusResult,
    ScalingMatrix,
    SpectralSummary,
    SumFunctionSummary,
    build_matrix,
    gamma_summary,
    primitivity_check,
    rho_sequence,
    spectral_radius,
)
from .model import (
    FifModel,
    InterpolationData,
    ModelConfig,
    Violation,
    builtin_model,
    validate_model,
)
from .oscillation import (
    DivergenceCertificate,
    OscillationVector,
    Verdict,
    divergence_check,
    oscillation_gap,
    oscillation_sum,
    oscillation_vector,
    oscillation_vector_gap,
)

__all__ = [
    "__version__",
    "IntervalBound",
    "VariationEstimate",
    "ZeroCount",
    "count_zeros",
    "interval_extrema",
    "interval_extrema_abs",
    "lipschitz_bound",
    "total_variation",
    "variation_upper",
    "Bound",
    "BoxCountResult",
    "DimensionVerdict",
    "assemble_verdict",
    "boxcount_dimension",
    "dim_bounds_gamma",
    "dim_bounds_rho",
    "EngineBounds",
    "GridValues",
    "engine_bounds",
    "grid_values",
    "sample_graph",
    "CapacityError",
    "ExpressionError",
    "FifdimError",
    "InsufficientResolutionError",
    "InternalInconsistencyError",
    "ModelValidationError",
    "ExprFunction",
    "parse_expr",
    "piecewise_linear",
    "PatternClass",
    "RadiusResult",
    "ScalingMatrix",
    "SpectralSummary",
    "SumFunctionSummary",
    "build_matrix",
    "gamma_summary",
    "primitivity_check",
    "rho_sequence",
    "spectral_radius",
    "FifModel",
    "InterpolationData",
    "ModelConfig",
    "Violation",
    "builtin_model",
    "validate_model",
    "DivergenceCertificate",
    "OscillationVector",
    "Verdict",
    "divergence_check",
    "oscillation_gap",
    "oscillation_sum",
    "oscillation_vector",
    "oscillation_vector_gap",
]
