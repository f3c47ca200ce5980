"""
Halton Quasi-Monte-Carlo Samples

Unscrambled Halton sequence from scipy.stats.qmc (first M primes as bases),
skipping index 0 so the first point is (1/2, 1/3, ...).

References:
- docs/theory.md §5.2: Reference moments
"""

import numpy as np
from scipy.stats import qmc


def halton(M: int, count: int, bounds: np.ndarray | None = None, start: int = 1) -> np.ndarray:
    """
    Halton points mapped affinely into Γ.

    Args:
        M: Dimension
        count: Number of points (≥ 1)
        bounds: (M, 2) box, default [0, 1]^M
        start: Index of the first point in the sequence

    Returns:
        (count, M) array

    Example:
        >>> halton(1, 3).ravel()
        array([0.5 , 0.25, 0.75])
    """
    if count < 1:
        raise ValueError(f"Halton count must be ≥ 1, got {count}")
    sampler = qmc.Halton(d=M, scramble=False)
    if start:
        sampler.fast_forward(start)
    unit = sampler.random(count)
    if bounds is None:
        return unit
    bounds = np.asarray(bounds, dtype=float)
    return bounds[:, 0] + (bounds[:, 1] - bounds[:, 0]) * unit
