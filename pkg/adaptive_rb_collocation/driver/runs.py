"""
Run Modes

Implements:
- run_sparse_grid(): basis updates over Θ_0, Θ_1, ..., Θ_ℓ with Smolyak moments
- run_fixed_anova(): PCM-ANOVA levels with fixed order p and optional truncation
- run_adaptive(): dimension- and p-adaptive PCM-ANOVA
- candidate_sets(): next-level index sets from the effective dimensions

References:
- docs/theory.md §5.1: Adaptive algorithm
- docs/gotchas.md: Interpretation choices
"""

import itertools
import logging
import time
from dataclasses import dataclass

import numpy as np

from ..anova.decomposition import (
    AnovaState,
    AnovaTerm,
    clamp_sqrt,
    combine_moments,
    indicator,
    saturation,
    term_mean,
)
from ..collocation.anova_points import anova_points
from ..collocation.sparse_grid import sparse_grid
from ..core.config import ConfigError
from ..fem.affine import AffineSystem, full_solve
from ..fem.solver import SolverError
from ..reduced_basis.basis import IndicatorConfig, ReducedBasis
from ..reduced_basis.greedy import UpdateResult, rbm_update, sort_by_indicator
from .report import LevelSummary, RunAborted, RunReport, TermSummary

logger = logging.getLogger(__name__)

Label = tuple[int, ...]


@dataclass
class AdaptiveConfig:
    """
    Settings of the adaptive run.

    Attributes:
        eps_rb: Basis tolerance ε_RB
        eps_a: Effective-dimension tolerance ε_A
        eps_p: Saturation tolerance ε_p
        p0: Initial order (odd)
        l0: Levels whose index sets are all visited initially
        l_max: Highest interaction level
        p_increment: Order step
        p_max: Orders above this are never visited
        cap_order_by_parent: Also cap p_K by the largest order at level |K|−1
        family: 1-D node family
        alpha: Indicator weight exponent
        direct_below: Direct-residual fallback threshold
    """

    eps_rb: float
    eps_a: float
    eps_p: float
    p0: int = 3
    l0: int = 2
    l_max: int = 3
    p_increment: int = 2
    p_max: int = 15
    cap_order_by_parent: bool = False
    family: str = "gauss_legendre"
    alpha: float = 0.0
    direct_below: float = 1e-6

    def validate(self) -> bool:
        for name in ("eps_rb", "eps_a", "eps_p"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive, got {getattr(self, name)}")
        if self.p0 < 1 or self.p0 % 2 == 0:
            raise ConfigError(f"p0: must be odd and ≥ 1, got {self.p0}")
        if self.p_increment < 1:
            raise ConfigError(f"p_increment: must be ≥ 1, got {self.p_increment}")
        if self.l0 < 1 or self.l_max < self.l0:
            raise ConfigError(f"l0/l_max: need 1 ≤ l0 ≤ l_max, got {self.l0}/{self.l_max}")
        if self.p_max < self.p0:
            raise ConfigError(f"p_max: must be ≥ p0={self.p0}, got {self.p_max}")
        return True

    def indicator_config(self) -> IndicatorConfig:
        return IndicatorConfig(alpha=self.alpha, direct_below=self.direct_below)


def candidate_sets(level: int, state: AnovaState, dimension: int, l0: int = 1) -> list[Label]:
    """
    Index sets of size `level` to visit.

    Level 1 visits every direction. Above that, K = S ∪ T with |K| = level
    for two admissible (level−1)-sets S and T: every set carrying a term up
    to l0, only effective sets (γ > ε_A) beyond. Every (level−1)-subset of
    K must carry a term, effective or not.
    """
    if level == 1:
        return [(m,) for m in range(dimension)]
    present = set(state.labels(level - 1))
    if level <= l0:
        base = sorted(present)
    else:
        base = sorted(K for K in present if state.is_effective(K))

    found = set()
    for S, T in itertools.combinations(base, 2):
        K = tuple(sorted(set(S) | set(T)))
        if len(K) != level or K in found:
            continue
        if all(sub in present for sub in itertools.combinations(K, level - 1)):
            found.add(K)
    return sorted(found)


def _seed(rb: ReducedBasis, report: RunReport, eps_a: float) -> AnovaState:
    """Anchor solve; its snapshot is the first basis column and u_∅."""
    snapshot = full_solve(rb.system, rb.system.anchor)
    rb.add_snapshot(snapshot, label=())
    report.visited_points += 1
    report.full_solves += 1
    return AnovaState.from_anchor(rb.system.dimension, snapshot.field, eps_a=eps_a)


def _account(report: RunReport, update: UpdateResult) -> None:
    report.visited_points += update.n_points
    report.full_solves += update.full_solves
    for phase, seconds in update.timings.items():
        report.timings[phase] = report.timings.get(phase, 0.0) + seconds


def _finish(report: RunReport, rb: ReducedBasis, started: float, state: AnovaState | None) -> None:
    report.n_basis = rb.size
    report.timings.update({k: v for k, v in rb.timings.items()})
    report.timings["total"] = time.perf_counter() - started
    if state is None:
        return
    report.terms = [
        TermSummary(K, t.order, t.mean_norm, t.gamma, t.rho, t.n_points, t.n_snapshots)
        for K, t in state.terms.items()
        if K
    ]
    counts: dict[Label, int] = {}
    for rec in rb.records:
        counts[rec.label] = counts.get(rec.label, 0) + 1
    report.directions = {
        m: (
            state.terms[(m,)].mean_norm if (m,) in state.terms else 0.0,
            state.terms[(m,)].order if (m,) in state.terms else 0,
            counts.get((m,), 0),
        )
        for m in range(state.dimension)
    }


def _close_level(
    level: int,
    candidates: list[Label],
    state: AnovaState,
    rb: ReducedBasis,
    report: RunReport,
    visited_before: int,
) -> None:
    effective = state.close_level(level)
    present = [K for K in candidates if K in state.terms]
    gammas = {K: state.terms[K].gamma for K in present}
    groups: dict[Label, list] = {K: [] for K in present}
    for rec in rb.records:
        if rec.label in groups:
            groups[rec.label].append(rec)
    ordered, order = sort_by_indicator(gammas, groups, present)
    report.ledger.extend(rec.label for rec in ordered)
    report.levels.append(
        LevelSummary(
            level=level,
            candidates=len(candidates),
            accepted=list(effective),
            rejected=[K for K in candidates if K not in effective],
            n_basis=rb.size,
            visited_points=report.visited_points - visited_before,
        )
    )
    logger.info(
        f"Level {level}: {len(candidates)} candidates, {len(effective)} effective, "
        f"N_r={rb.size}, visited={report.visited_points}"
    )
    if order:
        logger.debug(f"Level {level} indicator order: {order}")


def run_sparse_grid(
    system: AffineSystem,
    family: str,
    l_max: int,
    eps_rb: float,
    indicator_config: IndicatorConfig | None = None,
    growth=None,
) -> tuple[ReducedBasis, RunReport]:
    """
    Basis updates over the sparse grids Θ_0, ..., Θ_ℓmax in turn.

    Moments after every level come from the Smolyak weights and are kept in
    report.history; report.mean/sd hold the last level.

    Raises:
        RunAborted: On a full-solve failure, carrying the partial report
    """
    started = time.perf_counter()
    rb = ReducedBasis(system, indicator_config)
    report = RunReport("sparse_grid", tolerances={"eps_rb": eps_rb})
    M = system.dimension
    try:
        for level in range(l_max + 1):
            visited_before = report.visited_points
            points = sparse_grid(M, level, family, system.bounds, growth=growth)
            update = rbm_update(rb, points.points, eps_rb, weights=points.weights)
            _account(report, update)
            mean = update.raw_mean
            sd = clamp_sqrt(update.raw_second - mean**2)
            report.history.append((level, rb.size, report.visited_points, mean, sd))
            report.levels.append(
                LevelSummary(
                    level=level,
                    candidates=len(points),
                    n_basis=rb.size,
                    visited_points=report.visited_points - visited_before,
                )
            )
            report.mean, report.sd = mean, sd
            logger.info(
                f"Sparse grid ℓ={level} ({family}): {len(points)} points, N_r={rb.size}"
            )
    except SolverError as e:
        report.partial = True
        _finish(report, rb, started, None)
        raise RunAborted(str(e), report) from e
    _finish(report, rb, started, None)
    return rb, report


def run_fixed_anova(
    system: AffineSystem,
    level: int,
    p: int,
    eps_rb: float,
    eps_a: float = 0.0,
    family: str = "gauss_legendre",
    indicator_config: IndicatorConfig | None = None,
) -> tuple[ReducedBasis, AnovaState, RunReport]:
    """
    PCM-ANOVA with a fixed order p on every term.

    Every computed term stays in the expansion; only sets with γ_K > ε_A
    seed the next level. ε_A ≤ 0 disables truncation.

    Raises:
        RunAborted: On a full-solve failure, carrying the partial report
    """
    if level < 1 or p < 1:
        raise ValueError(f"Fixed ANOVA needs ℓ ≥ 1 and p ≥ 1, got ℓ={level}, p={p}")
    started = time.perf_counter()
    rb = ReducedBasis(system, indicator_config)
    report = RunReport("fixed_anova", tolerances={"eps_rb": eps_rb, "eps_a": eps_a})
    anchor, bounds, M = system.anchor, system.bounds, system.dimension
    state = None
    try:
        state = _seed(rb, report, eps_a)
        for lvl in range(1, level + 1):
            candidates = candidate_sets(lvl, state, M, l0=1)
            if not candidates:
                break
            visited_before = report.visited_points
            for K in candidates:
                points = anova_points(K, p, anchor, bounds, family)
                before = rb.size
                update = rbm_update(rb, points.points, eps_rb, weights=points.weights, label=K)
                _account(report, update)
                term = term_mean(
                    K, p, update.raw_mean, update.raw_second, state, n_points=len(points)
                )
                term.gamma = indicator(term, state)
                term.n_snapshots = rb.size - before
                state.add(term)
            _close_level(lvl, candidates, state, rb, report, visited_before)
    except SolverError as e:
        report.partial = True
        _finish(report, rb, started, state)
        raise RunAborted(str(e), report) from e

    report.mean, report.sd = combine_moments(state)
    _finish(report, rb, started, state)
    return rb, state, report


def run_adaptive(
    system: AffineSystem, config: AdaptiveConfig
) -> tuple[ReducedBasis, AnovaState, RunReport]:
    """
    Dimension- and p-adaptive PCM-ANOVA with basis updates.

    Per level, every active K is visited repeatedly: the basis is updated
    over Ξ_K^{p_K}, the term mean and γ_K recomputed, and K is excluded
    when no snapshot was added, γ_K < ε_A, or ρ_K < ε_p. An exclusion
    restores the basis and the term to their state before the visit;
    otherwise p_K grows by the increment. A first visit has no previous
    term: one adding no snapshot keeps its term, one with γ_K < ε_A is
    dropped.

    Raises:
        ConfigError: If the configuration is invalid
        RunAborted: On a full-solve failure, carrying the partial report
    """
    config.validate()
    started = time.perf_counter()
    rb = ReducedBasis(system, config.indicator_config())
    report = RunReport(
        "adaptive",
        tolerances={"eps_rb": config.eps_rb, "eps_a": config.eps_a, "eps_p": config.eps_p},
    )
    anchor, bounds, M = system.anchor, system.bounds, system.dimension
    state = None
    try:
        state = _seed(rb, report, config.eps_a)
        for level in range(1, config.l_max + 1):
            candidates = candidate_sets(level, state, M, l0=config.l0)
            if not candidates:
                break
            visited_before = report.visited_points
            cap = config.p_max
            if config.cap_order_by_parent and level > 1:
                parents = [t.order for K, t in state.terms.items() if len(K) == level - 1]
                cap = min(cap, max(parents, default=config.p0))

            orders = {K: config.p0 for K in candidates}
            active = list(candidates)
            while active:
                still_active = []
                for K in active:
                    if _visit(K, orders, state, rb, report, config, anchor, bounds, cap):
                        still_active.append(K)
                active = still_active
            _close_level(level, candidates, state, rb, report, visited_before)
    except SolverError as e:
        report.partial = True
        _finish(report, rb, started, state)
        raise RunAborted(str(e), report) from e

    report.mean, report.sd = combine_moments(state)
    _finish(report, rb, started, state)
    return rb, state, report


def _visit(
    K: Label,
    orders: dict[Label, int],
    state: AnovaState,
    rb: ReducedBasis,
    report: RunReport,
    config: AdaptiveConfig,
    anchor: np.ndarray,
    bounds: np.ndarray,
    cap: int,
) -> bool:
    """One pass of K at its current order. Returns True if K stays active."""
    previous: AnovaTerm | None = state.terms.get(K)
    basis_before = rb.size
    p = orders[K]

    points = anova_points(K, p, anchor, bounds, config.family)
    update = rbm_update(rb, points.points, config.eps_rb, weights=points.weights, label=K)
    _account(report, update)
    term = term_mean(K, p, update.raw_mean, update.raw_second, state, n_points=len(points))
    term.gamma = indicator(term, state)
    term.n_snapshots = rb.size - basis_before
    no_new_snapshot = rb.size == basis_before

    if previous is None:
        if term.gamma < config.eps_a:
            rb.truncate(basis_before)
            logger.info(f"K={K}: dropped at first visit, γ={term.gamma:.3e} < ε_A")
            return False
        state.add(term)
        if no_new_snapshot:
            logger.info(f"K={K}: no new snapshot at p={p}, kept and frozen")
            return False
    else:
        term.n_snapshots += previous.n_snapshots
        term.rho = saturation(term, previous, state)
        if no_new_snapshot or term.gamma < config.eps_a or term.rho < config.eps_p:
            rb.truncate(basis_before)
            logger.info(
                f"K={K}: excluded at p={p} (new snapshots={not no_new_snapshot}, "
                f"γ={term.gamma:.3e}, ρ={term.rho:.3e}); restored p={previous.order}"
            )
            return False
        state.add(term)

    next_order = p + config.p_increment
    if next_order > cap:
        logger.info(f"K={K}: order cap {cap} reached at p={p}")
        return False
    orders[K] = next_order
    return True
