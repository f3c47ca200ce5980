"""Reduced basis: offline blocks, reduced solves, update sweep."""

from .basis import (
    IndicatorConfig,
    ReducedBasis,
    ReducedSolveError,
    SnapshotRecord,
    direct_residual,
    reduced_solve,
    residual_indicator,
)
from .greedy import UpdateResult, rbm_update, sort_by_indicator

__all__ = [
    "IndicatorConfig",
    "ReducedBasis",
    "ReducedSolveError",
    "SnapshotRecord",
    "UpdateResult",
    "direct_residual",
    "rbm_update",
    "reduced_solve",
    "residual_indicator",
    "sort_by_indicator",
]
