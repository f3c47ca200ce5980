"""
Anchored ANOVA Decomposition

Terms u_K are defined by freezing the coordinates outside K at the anchor c
and removing all lower-order terms. Means follow the recursion
E[u_K] = E_K[u(c; ξ_K)] − Σ_{S⊊K} E[u_S] with E[u_∅] = u(c).

Implements:
- kappa(): combination coefficient ϰ_{M,j,ℓ}
- combination_coefficients(): signed multiplicity of each sampled slice
- AnovaTerm / AnovaState: term means, indicators, effective dimensions
- term_mean(), indicator(), saturation(), combine_moments()
- anchored_term(): pointwise u_K(ξ) by inclusion-exclusion

References:
- docs/theory.md §3: Anchored ANOVA
"""

import itertools
import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from math import comb

import numpy as np

logger = logging.getLogger(__name__)

Label = tuple[int, ...]

VARIANCE_ROUNDOFF = 1e-12


def format_label(K: Label, file_safe: bool = False) -> str:
    """1-based set notation, e.g. (0, 2) → "{1,3}", or "1-3" when file_safe."""
    if file_safe:
        return "-".join(str(m + 1) for m in K)
    return "{" + ",".join(str(m + 1) for m in K) + "}"


class AnovaStructureError(KeyError):
    """A lower-order term required by the recursion is missing."""


def kappa(M: int, j: int, level: int) -> int:
    """
    ϰ_{M,j,ℓ} = Σ_{r=j}^{ℓ} (−1)^{r−j} C(M−j, r−j).

    Example:
        >>> kappa(3, 1, 2)
        -1
    """
    if not 0 <= j <= level <= M:
        raise ValueError(f"kappa needs 0 ≤ j ≤ ℓ ≤ M, got M={M}, j={j}, ℓ={level}")
    return sum((-1) ** (r - j) * comb(M - j, r - j) for r in range(j, level + 1))


def combination_coefficients(labels: Iterable[Label]) -> dict[Label, int]:
    """
    c_S = Σ_{K ⊇ S, K accepted} (−1)^{|K|−|S|} for every accepted S.

    Reduces to ϰ_{M,|S|,ℓ} when every set with |K| ≤ ℓ is accepted.
    """
    accepted = [frozenset(k) for k in labels]
    coeffs = {}
    for S in accepted:
        coeffs[tuple(sorted(S))] = sum(
            (-1) ** (len(K) - len(S)) for K in accepted if S <= K
        )
    return coeffs


def anchored_term(
    u: Callable[[np.ndarray], np.ndarray], anchor: np.ndarray, K: Label, xi: np.ndarray
) -> np.ndarray:
    """u_K(ξ_K) = Σ_{S⊆K} (−1)^{|K|−|S|} u(c with ξ_S)."""
    total = 0.0
    for r in range(len(K) + 1):
        for S in itertools.combinations(K, r):
            point = np.array(anchor, dtype=float)
            point[list(S)] = np.asarray(xi)[list(S)]
            total = total + (-1) ** (len(K) - r) * np.asarray(u(point))
    return total


@dataclass(eq=False)
class AnovaTerm:
    """
    One anchored-ANOVA term.

    Attributes:
        directions: K (sorted, 0-based)
        order: p_K, points per direction
        mean: E[u_K]
        raw_mean: Σ_k w_k u(ξ^k) over Ξ_K^{p_K}
        raw_second: Σ_k w_k u(ξ^k)² over Ξ_K^{p_K}
        gamma: γ_K
        rho: ρ_K against the previous order, None at the first visit
        n_points: |Ξ_K^{p_K}|
        n_snapshots: Snapshots added while this term was computed
    """

    directions: Label
    order: int
    mean: np.ndarray
    raw_mean: np.ndarray
    raw_second: np.ndarray
    gamma: float = 0.0
    rho: float | None = None
    n_points: int = 1
    n_snapshots: int = 0

    @property
    def size(self) -> int:
        return len(self.directions)

    @property
    def mean_norm(self) -> float:
        return float(np.linalg.norm(self.mean))


@dataclass(eq=False)
class AnovaState:
    """
    Accepted terms and effective dimensions.

    Attributes:
        dimension: M
        level: Highest interaction order processed
        eps_a: Effective-dimension tolerance ε_A
        terms: Accepted terms keyed by K; the empty label holds the anchor
        active: J_l per level, the effective sets with γ_K > ε_A
    """

    dimension: int
    eps_a: float = 0.0
    level: int = 0
    terms: dict[Label, AnovaTerm] = field(default_factory=dict)
    active: dict[int, list[Label]] = field(default_factory=dict)

    @classmethod
    def from_anchor(cls, dimension: int, u0: np.ndarray, eps_a: float = 0.0) -> "AnovaState":
        u0 = np.asarray(u0, dtype=float)
        state = cls(dimension=dimension, eps_a=eps_a)
        state.terms[()] = AnovaTerm((), 0, u0.copy(), u0.copy(), u0**2, gamma=np.inf)
        return state

    @property
    def anchor_field(self) -> np.ndarray:
        return self.terms[()].mean

    def labels(self, size: int | None = None) -> list[Label]:
        return [k for k in self.terms if size is None or len(k) == size]

    def add(self, term: AnovaTerm) -> None:
        self.terms[term.directions] = term

    def remove(self, K: Label) -> None:
        self.terms.pop(K, None)

    def is_effective(self, K: Label) -> bool:
        term = self.terms.get(K)
        if term is None:
            return False
        return self.eps_a <= 0.0 or term.gamma > self.eps_a

    def close_level(self, level: int) -> list[Label]:
        """Record J_level as the effective sets of that size, in insertion order."""
        self.active[level] = [k for k in self.labels(level) if self.is_effective(k)]
        self.level = max(self.level, level)
        return self.active[level]

    def lower_norm_sum(self, size: int) -> float:
        return sum(t.mean_norm for k, t in self.terms.items() if len(k) < size)


def term_mean(
    directions: Label,
    order: int,
    raw_mean: np.ndarray,
    raw_second: np.ndarray,
    state: AnovaState,
    n_points: int = 1,
) -> AnovaTerm:
    """
    Build the term for K from its raw quadrature moments.

    Raises:
        AnovaStructureError: If some S ⊊ K is not in the state
    """
    K = tuple(sorted(directions))
    if not K:
        return AnovaTerm((), 0, raw_mean.copy(), raw_mean.copy(), raw_second.copy(), np.inf)
    mean = np.array(raw_mean, dtype=float, copy=True)
    for r in range(len(K)):
        for S in itertools.combinations(K, r):
            lower = state.terms.get(S)
            if lower is None:
                raise AnovaStructureError(f"Term {S} required by {K} is missing")
            mean -= lower.mean
    return AnovaTerm(K, order, mean, raw_mean, raw_second, n_points=n_points)


def indicator(term: AnovaTerm, state: AnovaState) -> float:
    """
    γ_K = ‖E[u_K]‖ / Σ_{|S|<|K|} ‖E[u_S]‖ over accepted S (anchor included).

    A zero denominator gives +∞ and a warning.
    """
    denominator = state.lower_norm_sum(term.size)
    if denominator == 0.0:
        logger.warning(f"Zero denominator in indicator for K={term.directions}")
        return np.inf
    return term.mean_norm / denominator


def saturation(new: AnovaTerm, old: AnovaTerm, state: AnovaState) -> float:
    """
    ρ_K = ‖E[u_K^{new}] − E[u_K^{old}]‖ / ‖Σ_{|S|≤|K|} E[u_S]‖.

    The denominator uses the accepted terms with K replaced by its new version.
    """
    if old.order >= new.order:
        raise ValueError(
            f"Saturation needs a strictly smaller previous order, got {old.order} → {new.order}"
        )
    total = new.mean.copy()
    for k, t in state.terms.items():
        if len(k) <= new.size and k != new.directions:
            total += t.mean
    denominator = np.linalg.norm(total)
    if denominator == 0.0:
        logger.warning(f"Zero denominator in saturation for K={new.directions}")
        return np.inf
    return float(np.linalg.norm(new.mean - old.mean) / denominator)


def combine_moments(state: AnovaState) -> tuple[np.ndarray, np.ndarray]:
    """
    Mean and standard deviation of the truncated expansion.

    E[u] and E[u²] combine the raw quadrature moments of every accepted
    slice with its signed multiplicity. Negative variance is clamped to 0.
    """
    coeffs = combination_coefficients(state.terms)
    mean = np.zeros_like(state.anchor_field)
    second = np.zeros_like(state.anchor_field)
    for K, c in coeffs.items():
        if c == 0:
            continue
        term = state.terms[K]
        mean += c * term.raw_mean
        second += c * term.raw_second
    variance = second - mean**2
    return mean, clamp_sqrt(variance)


def clamp_sqrt(variance: np.ndarray) -> np.ndarray:
    """Pointwise sqrt(max(var, 0)); logs the most negative excursion."""
    worst = float(variance.min()) if variance.size else 0.0
    if worst < 0.0:
        scale = max(float(np.abs(variance).max()), 1.0)
        if -worst > VARIANCE_ROUNDOFF * scale:
            logger.info(f"Clamped negative variance, most negative value {worst:.3e}")
    return np.sqrt(np.maximum(variance, 0.0))
