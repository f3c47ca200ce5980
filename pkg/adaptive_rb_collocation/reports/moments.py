"""
Reference Moments and Moment Errors

Implements:
- RunningMoments: chunked mean/variance accumulation (pairwise combination)
- qmc_reference(): Halton quasi-Monte-Carlo mean and sd, full or reduced solves
- moment_errors(): relative nodal errors e_μ and e_σ

References:
- docs/theory.md §5.2: Reference moments
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from ..anova.decomposition import clamp_sqrt
from ..collocation.halton import halton
from ..fem.affine import AffineSystem, full_solve
from ..reduced_basis.basis import IndicatorConfig, ReducedBasis
from ..reduced_basis.greedy import rbm_update

logger = logging.getLogger(__name__)

SOLVERS = ("auto", "full", "reduced")


class RunningMoments:
    """
    Mean and population variance of a stream of fields.

    Fields are buffered and folded in per chunk, so the result depends only
    on the order of the stream and the chunk size.
    """

    def __init__(self, n_nodes: int, chunk: int = 1000):
        if chunk < 1:
            raise ValueError(f"chunk must be ≥ 1, got {chunk}")
        self.chunk = chunk
        self.count = 0
        self.mean = np.zeros(n_nodes)
        self._m2 = np.zeros(n_nodes)
        self._buffer: list[np.ndarray] = []

    def push(self, u: np.ndarray) -> None:
        self._buffer.append(np.asarray(u, dtype=float))
        if len(self._buffer) >= self.chunk:
            self._flush()

    def _flush(self) -> None:
        if not self._buffer:
            return
        batch = np.array(self._buffer)
        self._buffer = []
        k = len(batch)
        batch_mean = batch.mean(axis=0)
        batch_m2 = ((batch - batch_mean) ** 2).sum(axis=0)
        n = self.count + k
        delta = batch_mean - self.mean
        self.mean = self.mean + delta * (k / n)
        self._m2 = self._m2 + batch_m2 + delta**2 * (self.count * k / n)
        self.count = n

    def result(self) -> tuple[np.ndarray, np.ndarray]:
        """(mean, population sd); the sd is clamped at 0."""
        self._flush()
        if self.count == 0:
            raise ValueError("No samples accumulated")
        return self.mean.copy(), clamp_sqrt(self._m2 / self.count)


@dataclass(eq=False)
class ReferenceMoments:
    """
    QMC reference moments and their provenance.

    Attributes:
        mean / sd: Moment fields
        count: Sample count
        sequence: Point sequence ("halton")
        solver: "full" or "reduced"
        n_basis: Size of the reference basis (reduced solver only)
        full_solves: Full FE solves performed
        seconds: Wall-clock time
    """

    mean: np.ndarray
    sd: np.ndarray
    count: int
    sequence: str = "halton"
    solver: str = "full"
    eps_ref: float | None = None
    n_basis: int = 0
    full_solves: int = 0
    seconds: float = 0.0

    def provenance(self) -> dict:
        info = {
            "count": self.count,
            "sequence": self.sequence,
            "solver": self.solver,
            "full_solves": self.full_solves,
        }
        if self.solver == "reduced":
            info["eps_ref"] = f"{self.eps_ref:.17e}"
            info["n_basis"] = self.n_basis
        return info


@dataclass(frozen=True)
class MomentErrors:
    """
    e_μ = ‖E_ref − E‖ / ‖E_ref‖ and e_σ likewise, in the nodal Euclidean norm.

    A zero-norm reference field gives the absolute error and sets the
    corresponding `absolute_*` flag.
    """

    e_mean: float
    e_sd: float
    absolute_mean: bool = False
    absolute_sd: bool = False
    count: int = 0
    sequence: str = "halton"
    solver: str = "full"


def qmc_reference(
    system: AffineSystem,
    count: int,
    solver: str = "auto",
    eps_ref: float = 1e-6,
    full_solve_limit: int = 10_000,
    chunk: int = 1000,
    indicator_config: IndicatorConfig | None = None,
) -> ReferenceMoments:
    """
    Quasi-Monte-Carlo reference moments over the first `count` Halton points in Γ.

    With solver="auto" every point gets a full solve when count ≤
    full_solve_limit; otherwise a fresh basis is built with tolerance
    eps_ref in the same sweep and the lifted reduced solutions are used.

    Args:
        system: Benchmark system
        count: Number of Halton points (≥ 1)
        solver: "auto", "full" or "reduced"
        eps_ref: Basis tolerance of the reduced reference
        full_solve_limit: Largest count solved fully under "auto"
        chunk: Accumulation chunk size

    Returns:
        ReferenceMoments
    """
    if solver not in SOLVERS:
        raise ValueError(f"Unknown reference solver '{solver}', expected one of {SOLVERS}")
    if solver == "auto":
        solver = "full" if count <= full_solve_limit else "reduced"

    started = time.perf_counter()
    points = halton(system.dimension, count, system.bounds)
    moments = RunningMoments(system.mesh.n_nodes, chunk=chunk)
    if solver == "full":
        for xi in points:
            moments.push(full_solve(system, xi).field)
        extra = {"full_solves": count}
    else:
        rb = ReducedBasis(system, indicator_config)
        update = rbm_update(rb, points, eps_ref, sink=lambda k, u: moments.push(u))
        extra = {"full_solves": update.full_solves, "n_basis": rb.size, "eps_ref": eps_ref}

    mean, sd = moments.result()
    reference = ReferenceMoments(
        mean=mean,
        sd=sd,
        count=count,
        solver=solver,
        seconds=time.perf_counter() - started,
        **extra,
    )
    logger.info(
        f"QMC reference: {count} Halton points, solver={solver}, "
        f"{reference.full_solves} full solves, {reference.seconds:.1f}s"
    )
    return reference


def _relative(reference: np.ndarray, candidate: np.ndarray, what: str) -> tuple[float, bool]:
    diff = float(np.linalg.norm(reference - candidate))
    norm = float(np.linalg.norm(reference))
    if norm == 0.0:
        logger.warning(f"Zero-norm reference {what}; reporting the absolute error")
        return diff, True
    return diff / norm, False


def moment_errors(
    reference: ReferenceMoments, mean: np.ndarray, sd: np.ndarray
) -> MomentErrors:
    """
    Relative errors of candidate moment fields against the reference.

    Raises:
        ValueError: If the fields live on different grids

    Example:
        >>> moment_errors(ref, 1.01 * ref.mean, ref.sd).e_mean  # doctest: +SKIP
        0.01
    """
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    if mean.shape != reference.mean.shape or sd.shape != reference.sd.shape:
        raise ValueError(
            f"Moment fields on different grids: {mean.shape}/{sd.shape} vs {reference.mean.shape}"
        )
    e_mean, abs_mean = _relative(reference.mean, mean, "mean")
    e_sd, abs_sd = _relative(reference.sd, sd, "sd")
    return MomentErrors(
        e_mean=e_mean,
        e_sd=e_sd,
        absolute_mean=abs_mean,
        absolute_sd=abs_sd,
        count=reference.count,
        sequence=reference.sequence,
        solver=reference.solver,
    )
