"""
Anchored PCM-ANOVA Point Sets

For a direction set K, the points vary the coordinates in K over a tensor
Gauss rule and freeze every other coordinate at the anchor c.

Implements:
- AnovaPointSet: points of one ANOVA term
- anova_points(): tensor rule over K, anchored elsewhere
- count_points(): |Ξ_ℓ| under either counting convention

References:
- docs/theory.md §3.1: ANOVA collocation points
"""

import csv
import itertools
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np

from .rules import make_rule

COUNT_CONVENTIONS = ("formula", "table")


@dataclass(eq=False)
class AnovaPointSet:
    """
    Attributes:
        directions: Sorted 0-based direction set K
        orders: Points per direction in K
        anchor: (M,) anchor point c
        points: (Π p_m, M) array
        weights: Tensor-product probabilist weights over the free coordinates
    """

    directions: tuple[int, ...]
    orders: tuple[int, ...]
    anchor: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    @property
    def label(self) -> tuple[int, ...]:
        return self.directions

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        M = self.points.shape[1]
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([f"xi_{m + 1}" for m in range(M)] + ["weight"])
            for x, w in zip(self.points, self.weights, strict=True):
                writer.writerow([f"{v:.17e}" for v in x] + [f"{w:.17e}"])
        return path


def anova_points(
    directions: tuple[int, ...],
    orders: int | tuple[int, ...],
    anchor: np.ndarray,
    bounds: np.ndarray,
    family: str = "gauss_legendre",
) -> AnovaPointSet:
    """
    Ξ_K^{p_K}: tensor rule over the directions in K, anchor elsewhere.

    Args:
        directions: 0-based direction set K (empty gives the anchor alone)
        orders: One order for every direction, or one per direction
        anchor: (M,) anchor point
        bounds: (M, 2) box Γ
        family: 1-D node family

    Returns:
        AnovaPointSet with Π p_m points
    """
    K = tuple(sorted(int(m) for m in directions))
    if isinstance(orders, int | np.integer):
        orders = (int(orders),) * len(K)
    orders = tuple(int(p) for p in orders)
    if len(orders) != len(K):
        raise ValueError(f"Need one order per direction in {K}, got {orders}")

    anchor = np.asarray(anchor, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    rules = [make_rule(family, p, tuple(bounds[m])) for m, p in zip(K, orders, strict=True)]

    n_points = int(np.prod(orders)) if K else 1
    points = np.tile(anchor, (n_points, 1))
    weights = np.ones(n_points)
    for row, combo in enumerate(itertools.product(*(range(len(r)) for r in rules))):
        for m, r, k in zip(K, rules, combo, strict=True):
            points[row, m] = r.nodes[k]
            weights[row] *= r.weights[k]
    return AnovaPointSet(K, orders, anchor, points, weights)


def count_points(M: int, level: int, p: int, convention: str = "formula") -> int:
    """
    Number of PCM-ANOVA points up to level ℓ with uniform order p.

    formula: Σ_{l=0}^{ℓ} C(M, l)·p^l (anchor included)
    table:   Σ_{l=1}^{ℓ} C(M, l)·(p−1)^l (anchor coordinate dropped per direction)

    Example:
        >>> count_points(64, 2, 9)
        163873
        >>> count_points(64, 2, 9, convention="table")
        129536
    """
    if convention == "formula":
        return sum(comb(M, l) * p**l for l in range(level + 1))
    if convention == "table":
        return sum(comb(M, l) * (p - 1) ** l for l in range(1, level + 1))
    raise ValueError(f"Unknown counting convention '{convention}', expected {COUNT_CONVENTIONS}")
