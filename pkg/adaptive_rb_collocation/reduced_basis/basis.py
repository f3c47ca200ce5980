"""
Reduced Basis and Offline Blocks

Orthonormal basis Q of the interior snapshots together with every
parameter-independent reduced quantity needed online:

    Q^T A_i Q,   Q^T f_j,   (A_i Q)^T (A_j Q),   (A_i Q)^T f_j,   f_i^T f_j

Each operator term A_i only touches the rows of its subdomain (the
convection term touches all rows), so A_i Q is stored on its row support
and Gram blocks exist only for pairs of terms whose supports overlap.

Implements:
- IndicatorConfig: residual weighting and the direct-residual fallback
- ReducedBasis: MGS orthogonalization, incremental offline updates, truncation
- reduced_solve(): dense LU with a LAPACK condition estimate
- residual_indicator(): offline-expanded residual norm

References:
- docs/theory.md §4: Reduced basis
"""

import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from ..anova.decomposition import format_label
from ..fem.affine import AffineSystem, Snapshot, assemble_at
from ..fem.solver import SolverError

logger = logging.getLogger(__name__)

DEGENERATE_RATIO = 1e-10
CONDITION_WARNING = 1e12
CAPACITY_STEP = 32


class ReducedSolveError(SolverError):
    """Singular reduced matrix."""

    def __init__(self, message: str, rcond: float):
        super().__init__(message)
        self.rcond = rcond


@dataclass
class IndicatorConfig:
    """
    Residual indicator settings.

    Attributes:
        alpha: Exponent of the density weight w_k = P(ξ^k)^α, 0 ≤ α ≤ 1
        direct_below: Relative indicator below which the residual is
            recomputed from full-size vectors (the expansion loses digits there)
    """

    alpha: float = 0.0
    direct_below: float = 1e-6

    def validate(self) -> bool:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"Indicator exponent α must lie in [0, 1], got {self.alpha}")
        if self.direct_below < 0.0:
            raise ValueError(f"direct_below must be ≥ 0, got {self.direct_below}")
        return True

    def weight(self, bounds: np.ndarray) -> float:
        """Uniform joint density on Γ raised to α (degenerate directions ignored)."""
        if self.alpha == 0.0:
            return 1.0
        width = bounds[:, 1] - bounds[:, 0]
        density = float(np.prod(1.0 / width[width > 0]))
        return density**self.alpha


@dataclass(frozen=True)
class SnapshotRecord:
    """Ledger entry for one basis column."""

    column: int
    xi: tuple[float, ...]
    label: tuple[int, ...] | None


class ReducedBasis:
    """
    Orthonormal reduced basis with incrementally maintained offline blocks.

    Columns beyond `size` are stale storage; truncate() therefore restores
    an earlier basis exactly.

    Attributes:
        system: AffineSystem the basis belongs to
        config: IndicatorConfig
        size: N_r
        records: SnapshotRecord per column
        snapshots: Interior snapshot vectors per column
        timings: Accumulated seconds per phase
    """

    def __init__(self, system: AffineSystem, config: IndicatorConfig | None = None):
        self.system = system
        self.config = config or IndicatorConfig()
        self.config.validate()
        self.logger = logging.getLogger(__name__)

        self.size = 0
        self.records: list[SnapshotRecord] = []
        self.snapshots: list[np.ndarray] = []
        self.timings = {"orthogonalize": 0.0, "offline": 0.0}

        n_f = system.n_forcing_terms
        self._forcing = np.column_stack(system.forcings)
        self.forcing_gram = self._forcing.T @ self._forcing

        self._rows = [np.flatnonzero(np.diff(A.indptr)) for A in system.operators]
        self._row_ops = [A[rows] for A, rows in zip(system.operators, self._rows, strict=True)]
        self._forcing_rows = [self._forcing[rows] for rows in self._rows]

        pairs = []
        for i in range(system.n_operator_terms):
            for j in range(i, system.n_operator_terms):
                _, pi, pj = np.intersect1d(
                    self._rows[i], self._rows[j], assume_unique=True, return_indices=True
                )
                if len(pi):
                    pairs.append((i, j, pi, pj))
        self._pairs = pairs
        self._pair_index = np.array([(i, j) for i, j, _, _ in pairs], dtype=int).reshape(-1, 2)
        self._pair_factor = np.where(self._pair_index[:, 0] == self._pair_index[:, 1], 1.0, 2.0)

        self._capacity = 0
        self._Q = np.zeros((system.n_interior, 0))
        self._Z = [np.zeros((len(rows), 0)) for rows in self._rows]
        self._ops = np.zeros((system.n_operator_terms, 0, 0))
        self._proj = np.zeros((n_f, 0))
        self._cross = np.zeros((system.n_operator_terms, n_f, 0))
        self._gram = np.zeros((len(pairs), 0, 0))

        self.logger.debug(
            f"ReducedBasis: {system.n_operator_terms} operator terms, "
            f"{len(pairs)} overlapping Gram pairs"
        )

    # ------------------------------------------------------------------ views

    @property
    def basis(self) -> np.ndarray:
        """Q, shape (N_interior, N_r)."""
        return self._Q[:, : self.size]

    def reduced_operators(self) -> np.ndarray:
        """Q^T A_i Q stacked, shape (n̂_a, N_r, N_r)."""
        r = self.size
        return self._ops[:, :r, :r]

    def reduced_forcings(self) -> np.ndarray:
        """Q^T f_j stacked, shape (n̂_f, N_r)."""
        return self._proj[:, : self.size]

    def gram_block(self, i: int, j: int) -> np.ndarray:
        """(A_i Q)^T (A_j Q); zero when the supports of A_i and A_j do not meet."""
        r = self.size
        for p, (a, b) in enumerate(self._pair_index):
            if (a, b) == (i, j):
                return self._gram[p, :r, :r].copy()
            if (a, b) == (j, i):
                return self._gram[p, :r, :r].T.copy()
        return np.zeros((r, r))

    def cross_block(self) -> np.ndarray:
        """(A_i Q)^T f_j stacked, shape (n̂_a, n̂_f, N_r)."""
        return self._cross[:, :, : self.size]

    # ------------------------------------------------------------ mutation

    def _grow(self) -> None:
        cap = self._capacity + CAPACITY_STEP

        def pad(a: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
            width = [(0, 0)] * a.ndim
            for ax in axes:
                width[ax] = (0, cap - a.shape[ax])
            return np.pad(a, width)

        self._Q = pad(self._Q, (1,))
        self._Z = [pad(z, (1,)) for z in self._Z]
        self._ops = pad(self._ops, (1, 2))
        self._proj = pad(self._proj, (1,))
        self._cross = pad(self._cross, (2,))
        self._gram = pad(self._gram, (1, 2))
        self._capacity = cap

    def orthogonalize(self, u: np.ndarray) -> tuple[np.ndarray, float]:
        """Modified Gram-Schmidt against Q, two passes. Returns (v, ‖v‖/‖u‖)."""
        u_norm = np.linalg.norm(u)
        if u_norm == 0.0:
            return np.zeros_like(u), 0.0
        v = np.array(u, dtype=float, copy=True)
        Q = self.basis
        for _ in range(2):
            for k in range(self.size):
                v -= (Q[:, k] @ v) * Q[:, k]
        return v, float(np.linalg.norm(v) / u_norm)

    def add_snapshot(self, snapshot: Snapshot, label: tuple[int, ...] | None = None) -> bool:
        """
        Append a snapshot and extend every offline block by one row/column.

        Returns:
            False if the snapshot is numerically in span(Q) and was rejected
        """
        t0 = time.perf_counter()
        v, ratio = self.orthogonalize(snapshot.interior)
        self.timings["orthogonalize"] += time.perf_counter() - t0
        if ratio < DEGENERATE_RATIO:
            self.logger.warning(
                f"Rejected degenerate snapshot at ξ={np.round(snapshot.xi, 6).tolist()} "
                f"(norm ratio {ratio:.2e})"
            )
            return False

        t0 = time.perf_counter()
        if self.size == self._capacity:
            self._grow()
        r = self.size
        q = v / np.linalg.norm(v)
        self._Q[:, r] = q
        Q = self._Q[:, : r + 1]

        for i, rows in enumerate(self._rows):
            z = self._row_ops[i] @ q
            Z = self._Z[i]
            Z[:, r] = z
            self._ops[i, : r + 1, r] = Q[rows].T @ z
            self._ops[i, r, :r] = q[rows] @ Z[:, :r]
            self._cross[i, :, r] = self._forcing_rows[i].T @ z
        self._proj[:, r] = self._forcing.T @ q

        for p, (i, j, pi, pj) in enumerate(self._pairs):
            Zi = self._Z[i][pi, : r + 1]
            Zj = self._Z[j][pj, : r + 1]
            self._gram[p, r, : r + 1] = Zi[:, r] @ Zj
            self._gram[p, :r, r] = Zi[:, :r].T @ Zj[:, r]

        self.size = r + 1
        self.records.append(
            SnapshotRecord(column=r, xi=tuple(float(x) for x in snapshot.xi), label=label)
        )
        self.snapshots.append(snapshot.interior.copy())
        self.timings["offline"] += time.perf_counter() - t0
        return True

    def truncate(self, size: int) -> None:
        """Drop columns beyond `size`; the kept blocks are untouched."""
        if not 0 <= size <= self.size:
            raise ValueError(f"Cannot truncate a basis of size {self.size} to {size}")
        self.size = size
        del self.records[size:]
        del self.snapshots[size:]

    # --------------------------------------------------------------- online

    def lift(self, coefficients: np.ndarray) -> np.ndarray:
        """Full nodal field Q ũ + u_g."""
        return self.system.lifting.extend(self.basis @ coefficients)

    def orthonormality_error(self) -> float:
        Q = self.basis
        return float(np.abs(Q.T @ Q - np.eye(self.size)).max()) if self.size else 0.0

    def check_offline(self) -> float:
        """Largest deviation of the stored Q^T A_i Q and Q^T f_j from a fresh rebuild."""
        Q = self.basis
        worst = 0.0
        for i, A in enumerate(self.system.operators):
            worst = max(worst, float(np.abs(Q.T @ (A @ Q) - self.reduced_operators()[i]).max()))
        worst = max(worst, float(np.abs(self._forcing.T @ Q - self.reduced_forcings()).max()))
        return worst

    def labels(self) -> list:
        return [rec.label for rec in self.records]

    def export(self, directory: str | Path) -> Path:
        """
        Write snapshots.npy (count × N_interior), basis.npy and parameters.csv.

        The .npy header carries dims and count.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        snapshots = np.array(self.snapshots).reshape(self.size, self.system.n_interior)
        np.save(directory / "snapshots.npy", snapshots)
        np.save(directory / "basis.npy", self.basis)
        with open(directory / "parameters.csv", "w", newline="") as f:
            writer = csv.writer(f)
            M = self.system.dimension
            writer.writerow(["column", "label"] + [f"xi_{m + 1}" for m in range(M)])
            for rec in self.records:
                label = "" if rec.label is None else format_label(rec.label, file_safe=True)
                writer.writerow([rec.column, label] + [f"{x:.17e}" for x in rec.xi])
        return directory

    def __repr__(self) -> str:
        return f"ReducedBasis(N_r={self.size}, n_interior={self.system.n_interior})"


def reduced_solve(rb: ReducedBasis, xi: np.ndarray) -> np.ndarray:
    """
    Solve (Σ φ_i Q^T A_i Q) ũ = Σ ψ_j Q^T f_j.

    Cost depends on N_r and the number of terms only.

    Raises:
        ReducedSolveError: If the reduced matrix is numerically singular
    """
    if rb.size == 0:
        raise ValueError("Reduced solve needs at least one basis column")
    xi = rb.system.check_parameter(xi)
    B = np.tensordot(rb.system.operator_values(xi), rb.reduced_operators(), axes=1)
    g = rb.system.forcing_values(xi) @ rb.reduced_forcings()

    anorm = np.linalg.norm(B, 1)
    lu, piv = lu_factor(B, check_finite=False)
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if not np.isfinite(rcond) or rcond <= np.finfo(float).eps:
        raise ReducedSolveError(
            f"Reduced matrix of size {rb.size} is singular (rcond={rcond:.3e})", rcond=rcond
        )
    if rcond * CONDITION_WARNING < 1.0:
        logger.warning(f"Reduced matrix condition estimate {1.0 / rcond:.3e} above 1e12")
    return lu_solve((lu, piv), g, check_finite=False)


def direct_residual(rb: ReducedBasis, xi: np.ndarray, coefficients: np.ndarray) -> float:
    """‖A_ξ Q ũ − f_ξ‖ / ‖f_ξ‖ from full-size vectors."""
    A, f = assemble_at(rb.system, xi)
    residual = np.linalg.norm(A @ (rb.basis @ coefficients) - f)
    f_norm = np.linalg.norm(f)
    return float(residual / f_norm) if f_norm > 0 else float(residual)


def residual_indicator(
    rb: ReducedBasis,
    xi: np.ndarray,
    coefficients: np.ndarray,
    expanded_only: bool = False,
) -> float:
    """
    η = ‖A_ξ Q ũ − f_ξ‖ / ‖f_ξ‖ · w through the offline expansion

        ‖r‖² = ũ^T G ũ − 2 ũ^T g + h.

    Negative round-off is clamped at 0. When the relative value falls below
    config.direct_below the residual is recomputed directly, unless
    expanded_only is set. A zero forcing gives the absolute residual.
    """
    xi = rb.system.check_parameter(xi)
    phi = rb.system.operator_values(xi)
    psi = rb.system.forcing_values(xi)
    r = rb.size
    u = coefficients

    pair_quads = (rb._gram[:, :r, :r] @ u) @ u
    i, j = rb._pair_index[:, 0], rb._pair_index[:, 1]
    quad = float(np.sum(rb._pair_factor * phi[i] * phi[j] * pair_quads))
    lin = float(phi @ (rb._cross[:, :, :r] @ u) @ psi)
    h = float(psi @ rb.forcing_gram @ psi)

    res2 = max(quad - 2.0 * lin + h, 0.0)
    if h > 0.0:
        eta = np.sqrt(res2 / h)
    else:
        logger.warning(f"Zero forcing at ξ={np.round(xi, 6).tolist()}, using absolute residual")
        eta = np.sqrt(res2)

    if not expanded_only and eta < rb.config.direct_below:
        logger.debug(f"Expanded residual {eta:.2e} below fallback threshold, recomputing directly")
        eta = direct_residual(rb, xi, u)
    return float(eta) * rb.config.weight(rb.system.bounds)
