"""Exact toolkit for Koopman/transfer operators of measure-preserving
maps of [0,1): dyadic block-matrix extraction, first-fit realization of
doubly stochastic matrices by invertible interval exchanges, and
operator-metric / range-distance diagnostics showing how invertible
maps approximate non-invertible ones.
"""

from .core import (
    DEFAULT_MAX_LEVEL,
    Interval,
    Rat,
    ResourceLimitError,
    StepFunction,
    ValidationError,
    decimal_str,
    dyadic_cell,
    dyadic_partition,
    format_rat,
    parse_rat,
    step_inner,
    step_l2_dist,
    step_l2_dist_sq,
)
from .operators import (
    DoublyStochasticMatrix,
    MetricBasis,
    MetricReport,
    MetricTerm,
    koopman_matrix,
    op_metric,
    range_distance,
    range_distance_sq,
    transfer_apply,
    weak_defect,
)
from .realize import (
    ApproximationStep,
    PlacementState,
    approximation_sequence,
    birkhoff_combination,
    realize_iet,
)
from .transforms import (
    Branch,
    Piece,
    PiecewiseAffineMap,
    PiecewiseTranslation,
    builtin_map,
    doubling,
    half_swap,
    identity,
    identity_affine,
    koopman_apply,
    map_from_json_obj,
    rotation,
    tent,
)

__all__ = [
    "DEFAULT_MAX_LEVEL",
    "ApproximationStep",
    "Branch",
    "DoublyStochasticMatrix",
    "Interval",
    "MetricBasis",
    "MetricReport",
    "MetricTerm",
    "Piece",
    "PiecewiseAffineMap",
    "PiecewiseTranslation",
    "PlacementState",
    "Rat",
    "ResourceLimitError",
    "StepFunction",
    "ValidationError",
    "approximation_sequence",
    "birkhoff_combination",
    "builtin_map",
    "decimal_str",
    "doubling",
    "dyadic_cell",
    "dyadic_partition",
    "format_rat",
    "half_swap",
    "identity",
    "identity_affine",
    "koopman_apply",
    "koopman_matrix",
    "map_from_json_obj",
    "op_metric",
    "parse_rat",
    "range_distance",
    "range_distance_sq",
    "realize_iet",
    "rotation",
    "step_inner",
    "step_l2_dist",
    "step_l2_dist_sq",
    "tent",
    "transfer_apply",
    "weak_defect",
]

__version__ = "0.1.0"
