"""
Basis Update Sweep and Indicator Sort

Implements:
- rbm_update(): one pass over a point set in stored order; reduced solve where
  the residual indicator is below ε_RB, full solve + augmentation otherwise
- sort_by_indicator(): selection by maximum ANOVA indicator, first maximum wins

References:
- docs/theory.md §4.3: Update sweep
"""

import logging
import time
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..fem.affine import full_solve
from .basis import ReducedBasis, ReducedSolveError, reduced_solve, residual_indicator

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class UpdateResult:
    """
    Outcome of one sweep.

    Attributes:
        n_points: Points visited
        full_solves: Full FE solves performed
        added: Point indices whose snapshots entered the basis
        indicators: η at every point (+∞ where no reduced solve was possible)
        fields: (n_points, N_h) solution fields if requested
        raw_mean / raw_second: Σ w_k u_k and Σ w_k u_k² if weights were given
        timings: Seconds spent in reduced solves, indicators and full solves
    """

    n_points: int
    full_solves: int = 0
    added: list[int] = field(default_factory=list)
    indicators: np.ndarray | None = None
    fields: np.ndarray | None = None
    raw_mean: np.ndarray | None = None
    raw_second: np.ndarray | None = None
    timings: dict = field(default_factory=lambda: {"reduced": 0.0, "full": 0.0})


def rbm_update(
    rb: ReducedBasis,
    points: np.ndarray,
    eps_rb: float,
    weights: np.ndarray | None = None,
    label: tuple[int, ...] | None = None,
    keep_fields: bool = False,
    sink: Callable[[int, np.ndarray], None] | None = None,
) -> UpdateResult:
    """
    Update the basis over the points of Θ, in order.

    Per point: reduced solve and η; if η < ε_RB the lifted reduced solution
    is used, else a full solve is appended to the basis (degenerate
    snapshots are rejected and their full solution still used).

    Args:
        rb: ReducedBasis, mutated in place
        points: (n, M) parameter points
        eps_rb: Tolerance ε_RB
        weights: Quadrature weights for the raw moment sums
        label: ANOVA label recorded with every accepted snapshot
        keep_fields: Return all solution fields
        sink: Called as sink(k, field) for every point

    Returns:
        UpdateResult
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    result = UpdateResult(n_points=n, indicators=np.full(n, np.inf))
    fields = [] if keep_fields else None
    if weights is not None:
        result.raw_mean = np.zeros(rb.system.mesh.n_nodes)
        result.raw_second = np.zeros(rb.system.mesh.n_nodes)

    for k, xi in enumerate(points):
        eta = np.inf
        coefficients = None
        if rb.size:
            t0 = time.perf_counter()
            try:
                coefficients = reduced_solve(rb, xi)
                eta = residual_indicator(rb, xi, coefficients)
            except ReducedSolveError as e:
                logger.warning(f"Reduced solve failed ({e}); falling back to a full solve")
            result.timings["reduced"] += time.perf_counter() - t0
        result.indicators[k] = eta

        if eta < eps_rb:
            u = rb.lift(coefficients)
        else:
            t0 = time.perf_counter()
            snapshot = full_solve(rb.system, xi)
            result.timings["full"] += time.perf_counter() - t0
            result.full_solves += 1
            if rb.add_snapshot(snapshot, label=label):
                result.added.append(k)
            u = snapshot.field

        if weights is not None:
            result.raw_mean += weights[k] * u
            result.raw_second += weights[k] * u**2
        if fields is not None:
            fields.append(u)
        if sink is not None:
            sink(k, u)

    if fields is not None:
        result.fields = np.array(fields)
    logger.debug(
        f"rbm_update: {n} points, {result.full_solves} full solves, "
        f"{len(result.added)} added, N_r={rb.size}"
    )
    return result


def sort_by_indicator(
    gammas: dict[Hashable, float],
    groups: dict[Hashable, Sequence],
    order: Sequence[Hashable],
) -> tuple[list, list]:
    """
    Reorder snapshot groups by descending indicator.

    Repeatedly takes the index with the largest γ among those left; ties go
    to the one earliest in `order`.

    Returns:
        (snapshots concatenated group by group, indices in selection order)

    Example:
        >>> sort_by_indicator({"a": 0.1, "b": 0.9, "c": 0.5}, {}, ["a", "b", "c"])[1]
        ['b', 'c', 'a']
    """
    remaining = list(order)
    ordered_snapshots: list = []
    ordered_indices: list = []
    while remaining:
        best = 0
        for t in range(1, len(remaining)):
            if gammas[remaining[t]] > gammas[remaining[best]]:
                best = t
        K = remaining.pop(best)
        ordered_indices.append(K)
        ordered_snapshots.extend(groups.get(K, ()))
    return ordered_snapshots, ordered_indices
