"""
Experiment Runner

Builds the benchmark from an ExperimentConfig, computes QMC reference
moments, runs the configured mode once per ε_RB of the ladder and writes
the artifacts:

    errors.csv        one row per ladder value (per level in sparse-grid mode)
    directions.csv    first-order ‖E[u_j]‖, p_j and snapshot counts
    anova_terms.csv   every accepted term with its indicators
    report.txt        run summary of the last ladder value
    points/, basis/, matrices/   optional exports

References:
- docs/theory.md §6: Experiments
"""

import logging
import time
from pathlib import Path

from ..anova.decomposition import combination_coefficients, format_label
from ..collocation.anova_points import anova_points
from ..collocation.sparse_grid import sparse_grid
from ..core.config import ConfigError, ExperimentConfig
from ..driver.report import RunAborted, RunReport
from ..driver.runs import AdaptiveConfig, run_adaptive, run_fixed_anova, run_sparse_grid
from ..fem.affine import AffineSystem, build_benchmark
from ..fem.mesh import build_mesh
from ..fem.solver import SolverError, dump_matrix_market
from ..reduced_basis.basis import IndicatorConfig
from ..reports.moments import ReferenceMoments, moment_errors, qmc_reference
from ..reports.tables import ErrorRow, write_directions, write_errors, write_terms

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_system(config: ExperimentConfig) -> AffineSystem:
    p = config.problem
    mesh = build_mesh(p.n, tuple(p.partition))
    bounds = [list(p.bounds)] * mesh.n_subdomains
    return build_benchmark(
        mesh,
        nu=p.nu,
        velocity=p.velocity,
        bounds=bounds,
        forcing=p.forcing,
        freeze_sd_at_anchor=p.freeze_sd_at_anchor,
    )


def _run_once(system: AffineSystem, config: ExperimentConfig, eps_rb: float):
    """One run of the configured mode; returns (rb, state or None, report)."""
    m = config.method
    indicator_config = IndicatorConfig(alpha=m.alpha, direct_below=m.direct_below)
    if m.mode == "sparse_grid":
        rb, report = run_sparse_grid(system, m.family, m.sparse_levels, eps_rb, indicator_config)
        return rb, None, report
    if m.mode == "fixed_anova":
        return run_fixed_anova(
            system,
            level=m.level,
            p=m.p_fixed,
            eps_rb=eps_rb,
            eps_a=m.eps_a or 0.0,
            family=m.family,
            indicator_config=indicator_config,
        )
    eps_a, eps_p = m.tolerances(eps_rb)
    adaptive = AdaptiveConfig(
        eps_rb=eps_rb,
        eps_a=eps_a,
        eps_p=eps_p,
        p0=m.p0,
        l0=m.l0,
        l_max=m.l_max,
        p_increment=m.p_increment,
        p_max=m.p_max,
        cap_order_by_parent=m.cap_order_by_parent,
        family=m.family,
        alpha=m.alpha,
        direct_below=m.direct_below,
    )
    return run_adaptive(system, adaptive)


def _error_rows(
    report: RunReport, reference: ReferenceMoments, eps_rb: float, deterministic: bool
) -> list[ErrorRow]:
    seconds = 0.0 if deterministic else report.timings.get("total", 0.0)
    if report.mode == "sparse_grid":
        rows = []
        for level, n_basis, visited, mean, sd in report.history:
            errors = moment_errors(reference, mean, sd)
            rows.append(
                ErrorRow(
                    mode=report.mode,
                    eps_rb=eps_rb,
                    level=level,
                    n_basis=n_basis,
                    visited=visited,
                    e_mean=errors.e_mean,
                    e_sd=errors.e_sd,
                    seconds=seconds,
                )
            )
        return rows
    if report.mean is None:
        return []
    errors = moment_errors(reference, report.mean, report.sd)
    return [
        ErrorRow(
            mode=report.mode,
            eps_rb=eps_rb,
            level=len(report.levels),
            n_basis=report.n_basis,
            visited=report.visited_points,
            e_mean=errors.e_mean,
            e_sd=errors.e_sd,
            seconds=seconds,
        )
    ]


def _export_points(directory: Path, system: AffineSystem, config: ExperimentConfig, state) -> None:
    m = config.method
    if state is None:
        for level in range(m.sparse_levels + 1):
            grid = sparse_grid(system.dimension, level, m.family, system.bounds)
            grid.to_csv(directory / f"sparse_grid_level_{level}.csv")
        return
    for K, term in state.terms.items():
        if not K:
            continue
        points = anova_points(K, term.order, system.anchor, system.bounds, m.family)
        name = format_label(K, file_safe=True)
        points.to_csv(directory / f"term_{name}_p{term.order}.csv")


def _write_outputs(
    out: Path,
    report: RunReport,
    state,
    rows: list[ErrorRow],
    reference: ReferenceMoments | None,
    config: ExperimentConfig,
) -> None:
    write_errors(out / "errors.csv", rows)
    if state is not None:
        write_directions(out / "directions.csv", report.directions)
        write_terms(out / "anova_terms.csv", report.terms, combination_coefficients(state.terms))
    extra = {}
    if reference is not None:
        extra["reference"] = reference.provenance()
    extra["ladder"] = {"eps_rb": " ".join(f"{e:.17e}" for e in config.method.eps_rb)}
    if config.deterministic:
        report.timings = {k: 0.0 for k in report.timings}
    report.write(out / "report.txt", extra=extra)


def run_experiment(config: ExperimentConfig, output_dir: str | Path | None = None) -> int:
    """
    Run one experiment and write its artifacts.

    Returns:
        EXIT_OK, EXIT_CONFIG (invalid config) or EXIT_NUMERICAL (solver failure;
        artifacts written so far are kept and report.txt marks the run partial)
    """
    try:
        config.validate()
    except ConfigError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG

    out = Path(output_dir or config.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    system = build_system(config)
    logger.info(
        f"Benchmark: n={config.problem.n}, M={system.dimension}, "
        f"N_interior={system.n_interior}, terms={system.n_operator_terms}/{system.n_forcing_terms}"
    )
    if config.output.dump_matrices:
        for i, A in enumerate(system.operators):
            dump_matrix_market(
                out / "matrices" / f"A_{i}.mtx",
                A,
                comment=str(system.operator_coeffs[i].describe()),
            )

    r = config.reference
    reference = None
    rows: list[ErrorRow] = []
    try:
        reference = qmc_reference(
            system,
            r.count,
            eps_ref=r.eps_ref,
            full_solve_limit=r.full_solve_limit,
            chunk=r.chunk,
        )
        rb = state = report = None
        for eps_rb in config.method.eps_rb:
            rb, state, report = _run_once(system, config, eps_rb)
            rows.extend(_error_rows(report, reference, eps_rb, config.deterministic))
            logger.info(
                f"ε_RB={eps_rb:.3e}: N_r={report.n_basis}, visited={report.visited_points}, "
                f"e_mean={rows[-1].e_mean:.3e}, e_sd={rows[-1].e_sd:.3e}"
            )
            write_errors(out / "errors.csv", rows)
    except RunAborted as e:
        logger.error(f"Run aborted: {e}")
        _write_outputs(out, e.report, None, rows, reference, config)
        return EXIT_NUMERICAL
    except SolverError as e:
        logger.error(f"Reference solve failed: {e}")
        write_errors(out / "errors.csv", rows)
        return EXIT_NUMERICAL

    _write_outputs(out, report, state, rows, reference, config)
    if config.output.export_points:
        _export_points(out / "points", system, config, state)
    if config.output.export_basis:
        rb.export(out / "basis")
    logger.info(f"Artifacts in {out} ({time.perf_counter() - started:.1f}s)")
    return EXIT_OK
