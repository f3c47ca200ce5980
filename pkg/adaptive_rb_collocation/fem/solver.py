"""
Sparse Direct Solver

Implements:
- solve_sparse(): SuperLU factorization with a residual contract
- dump_matrix_market(): Matrix Market export for cross-checking

References:
- docs/theory.md §1.3: Linear solves
"""

import logging
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import splu

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
PIVOT_TOL = 1e-14


class SolverError(RuntimeError):
    """Singular factorization or a residual above the solver contract."""

    def __init__(self, message: str, pivot: float | None = None, residual: float | None = None):
        super().__init__(message)
        self.pivot = pivot
        self.residual = residual


def solve_sparse(A: sp.spmatrix, b: np.ndarray, refine_steps: int = 2) -> np.ndarray:
    """
    Solve A x = b by sparse LU with iterative refinement.

    Post-condition: ‖Ax − b‖₂ / ‖b‖₂ ≤ 1e-10.

    Args:
        A: Square sparse matrix
        b: Right-hand side
        refine_steps: Maximum refinement sweeps if the first residual misses the contract

    Returns:
        Solution vector

    Raises:
        SolverError: On a (near-)zero pivot or an unmet residual contract
    """
    b = np.asarray(b, dtype=float)
    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b)

    A = sp.csc_matrix(A)
    try:
        lu = splu(A)
    except RuntimeError as e:
        raise SolverError(f"Sparse factorization failed: {e}", pivot=0.0) from e

    pivots = np.abs(lu.U.diagonal())
    pivot = float(pivots.min()) if pivots.size else 0.0
    if pivot <= PIVOT_TOL * max(float(pivots.max()), 1.0):
        logger.error(f"Near-singular factorization, smallest pivot {pivot:.3e}")
        raise SolverError(
            f"Matrix is numerically singular (smallest pivot {pivot:.3e})", pivot=pivot
        )

    x = lu.solve(b)
    residual = np.linalg.norm(A @ x - b) / b_norm
    for _ in range(refine_steps):
        if residual <= RESIDUAL_TOL:
            break
        x += lu.solve(b - A @ x)
        residual = np.linalg.norm(A @ x - b) / b_norm

    if residual > RESIDUAL_TOL:
        raise SolverError(
            f"Relative residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} "
            f"(smallest pivot {pivot:.3e})",
            pivot=pivot,
            residual=residual,
        )
    return x


def dump_matrix_market(path: str | Path, matrix: sp.spmatrix, comment: str = "") -> Path:
    """Write a sparse matrix in Matrix Market coordinate format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
    return path
