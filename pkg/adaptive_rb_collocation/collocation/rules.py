"""
One-Dimensional Quadrature Rules

Gauss-Legendre and Clenshaw-Curtis nodes mapped to [a, b], weights in the
probabilist convention (they sum to 1 against the uniform density).

Implements:
- Rule1D: nodes/weights container
- gauss_legendre(): p-point rule from chaospy's Gaussian quadrature
- clenshaw_curtis(): m-point rule on Chebyshev extrema, via chaospy
- make_rule(): dispatch by family name

References:
- docs/theory.md §2.1: Collocation rules
"""

from dataclasses import dataclass
from functools import lru_cache

import chaospy as cp
import numpy as np

FAMILIES = ("gauss_legendre", "clenshaw_curtis")

_REFERENCE = cp.Uniform(-1.0, 1.0)


@dataclass(frozen=True, eq=False)
class Rule1D:
    """Nodes in [a, b] (increasing) and probabilist weights."""

    family: str
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


def _map(x: np.ndarray, interval: tuple[float, float]) -> np.ndarray:
    a, b = float(interval[0]), float(interval[1])
    return a + 0.5 * (b - a) * (x + 1.0)


@lru_cache(maxsize=64)
def _reference(rule: str, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point chaospy rule against U(−1, 1), sorted and mirror-symmetrized."""
    nodes, weights = cp.generate_quadrature(n_points - 1, _REFERENCE, rule=rule)
    order = np.argsort(nodes[0])
    x, w = nodes[0][order], weights[order]
    # the middle node of odd rules is exactly the midpoint
    return 0.5 * (x - x[::-1]), 0.5 * (w + w[::-1])


def gauss_legendre(p: int, interval: tuple[float, float] = (-1.0, 1.0)) -> Rule1D:
    """
    p-point Gauss-Legendre rule, exact to degree 2p−1.

    Example:
        >>> np.round(gauss_legendre(3).weights * 18, 12)
        array([5., 8., 5.])
    """
    if p < 1:
        raise ValueError(f"Gauss-Legendre needs p ≥ 1, got {p}")
    x, w = _reference("gaussian", p)
    return Rule1D("gauss_legendre", _map(x, interval), w.copy())


def clenshaw_curtis(m: int, interval: tuple[float, float] = (-1.0, 1.0)) -> Rule1D:
    """
    m-point Clenshaw-Curtis rule on the extrema of T_{m−1}.

    Endpoints are included for m ≥ 2; m = 1 gives the midpoint rule.
    """
    if m < 1:
        raise ValueError(f"Clenshaw-Curtis needs m ≥ 1, got {m}")
    if m == 1:
        return Rule1D("clenshaw_curtis", _map(np.zeros(1), interval), np.ones(1))
    x, w = _reference("clenshaw_curtis", m)
    return Rule1D("clenshaw_curtis", _map(x, interval), w.copy())


def make_rule(family: str, n_points: int, interval: tuple[float, float]) -> Rule1D:
    if family == "gauss_legendre":
        return gauss_legendre(n_points, interval)
    if family == "clenshaw_curtis":
        return clenshaw_curtis(n_points, interval)
    raise ValueError(f"Unknown node family '{family}', expected one of {FAMILIES}")


def growth(family: str, i: int) -> int:
    """
    Points of the 1-D rule at sparse-grid level index i ≥ 1.

    CC doubles (1, 3, 5, 9, ...) so consecutive rules are nested; GL grows
    linearly (m_i = i).
    """
    if i < 1:
        raise ValueError(f"Level index must be ≥ 1, got {i}")
    if family == "clenshaw_curtis":
        return 1 if i == 1 else 2 ** (i - 1) + 1
    if family == "gauss_legendre":
        return i
    raise ValueError(f"Unknown node family '{family}', expected one of {FAMILIES}")
