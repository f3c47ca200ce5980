"""
Smolyak Sparse Grids

Θ_ℓ is the union of tensor rules with ℓ+1 ≤ |i| ≤ ℓ+M, each carrying the
combination coefficient (−1)^{ℓ+M−|i|}·C(M−1, ℓ+M−|i|). Coinciding points
are merged and their weights accumulated.

Implements:
- PointSet: merged points, signed weights, generating multi-indices
- compositions(): multi-indices with a fixed total
- sparse_grid(): Θ_ℓ for either node family
- merge_points(): tolerance-based duplicate merging

References:
- docs/theory.md §2.2: Sparse grids
"""

import csv
import itertools
import logging
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from .rules import make_rule
from .rules import growth as default_growth

logger = logging.getLogger(__name__)

MERGE_DECIMALS = 12


@dataclass(eq=False)
class PointSet:
    """
    Collocation points with quadrature weights.

    Attributes:
        dimension: M
        points: (N, M) array
        weights: (N,) weights, possibly negative; sum to 1
        labels: Generating multi-index (or ANOVA label) of each point's first occurrence
        merge_map: Raw tensor-point index → merged point index
    """

    dimension: int
    points: np.ndarray
    weights: np.ndarray
    labels: list = field(default_factory=list)
    merge_map: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __len__(self) -> int:
        return len(self.points)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Σ_k w_k v_k over the leading axis."""
        return np.tensordot(self.weights, np.asarray(values), axes=1)

    def to_csv(self, path: str | Path) -> Path:
        """One point per row, weight in the last column."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"xi_{m + 1}" for m in range(self.dimension)] + ["weight"])
            for x, w in zip(self.points, self.weights, strict=True):
                writer.writerow([f"{v:.17e}" for v in x] + [f"{w:.17e}"])
        return path


def compositions(total: int, parts: int):
    """Yield tuples of `parts` positive integers summing to `total`, lexicographically."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def merge_points(
    points: np.ndarray, weights: np.ndarray, bounds: np.ndarray, labels: list | None = None
) -> PointSet:
    """
    Merge points that agree to MERGE_DECIMALS in box-normalized coordinates.

    First occurrence fixes the stored coordinates and label; weights add up.
    """
    bounds = np.asarray(bounds, dtype=float)
    width = bounds[:, 1] - bounds[:, 0]
    width = np.where(width > 0, width, 1.0)
    keys = np.round((points - bounds[:, 0]) / width, MERGE_DECIMALS) + 0.0

    index: dict[tuple, int] = {}
    merge_map = np.empty(len(points), dtype=int)
    kept: list[int] = []
    merged_w: list[float] = []
    for k, key in enumerate(map(tuple, keys)):
        slot = index.get(key)
        if slot is None:
            slot = index[key] = len(kept)
            kept.append(k)
            merged_w.append(0.0)
        merged_w[slot] += weights[k]
        merge_map[k] = slot

    return PointSet(
        dimension=points.shape[1],
        points=points[kept],
        weights=np.array(merged_w),
        labels=[labels[k] for k in kept] if labels is not None else [],
        merge_map=merge_map,
    )


def smolyak_coefficient(M: int, level: int, multi_index: tuple[int, ...]) -> int:
    r = level + M - sum(multi_index)
    return (-1) ** r * comb(M - 1, r)


def sparse_grid(
    M: int,
    level: int,
    family: str = "gauss_legendre",
    bounds: np.ndarray | None = None,
    growth=None,
) -> PointSet:
    """
    Smolyak sparse grid Θ_ℓ on the box Γ.

    Args:
        M: Stochastic dimension
        level: ℓ ≥ 0
        family: "gauss_legendre" or "clenshaw_curtis"
        bounds: (M, 2) box, default [-1, 1]^M
        growth: Callable i ↦ 1-D point count; defaults to the family's rule

    Returns:
        PointSet with merged nested points; weights sum to 1
    """
    if level < 0:
        raise ValueError(f"Sparse-grid level must be ≥ 0, got {level}")
    if bounds is None:
        bounds = np.tile([-1.0, 1.0], (M, 1))
    bounds = np.asarray(bounds, dtype=float)
    grow = growth or (lambda i: default_growth(family, i))

    rule_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}

    def rule(m: int, i: int):
        key = (m, i)
        if key not in rule_cache:
            r = make_rule(family, grow(i), tuple(bounds[m]))
            rule_cache[key] = (r.nodes, r.weights)
        return rule_cache[key]

    all_points, all_weights, all_labels = [], [], []
    for total in range(max(level + 1, M), level + M + 1):
        for idx in compositions(total, M):
            c = smolyak_coefficient(M, level, idx)
            if c == 0:
                continue
            rules = [rule(m, i) for m, i in enumerate(idx)]
            for combo in itertools.product(*(range(len(r[0])) for r in rules)):
                all_points.append([rules[m][0][k] for m, k in enumerate(combo)])
                all_weights.append(c * np.prod([rules[m][1][k] for m, k in enumerate(combo)]))
                all_labels.append(idx)

    points = merge_points(np.array(all_points), np.array(all_weights), bounds, all_labels)
    logger.debug(
        f"Sparse grid M={M} ℓ={level} {family}: {len(all_points)} tensor points, "
        f"{len(points)} after merging"
    )
    return points
