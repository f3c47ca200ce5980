"""
Acceptance Tests: Full-Scale Benchmark Runs

Basis sizes, moment errors, anisotropy and point counts on the benchmark
configurations shipped in configs/. These take minutes to tens of minutes
and are deselected by default; run with `pytest -m slow`.
"""

from pathlib import Path

import numpy as np
import pytest

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


def _load(name):
    from adaptive_rb_collocation.core.config import ExperimentConfig

    config = ExperimentConfig.from_yaml(CONFIG_DIR / f"{name}.yaml")
    config.validate()
    return config


def _adaptive(config, eps_rb):
    from adaptive_rb_collocation.driver.runs import AdaptiveConfig

    m = config.method
    eps_a, eps_p = m.tolerances(eps_rb)
    return AdaptiveConfig(
        eps_rb=eps_rb, eps_a=eps_a, eps_p=eps_p, p0=m.p0, l0=m.l0, l_max=m.l_max, p_max=m.p_max
    )


@pytest.fixture(scope="module")
def table2_runs():
    """6×6, ν = 1/2: reference moments and one adaptive run per ladder value."""
    from adaptive_rb_collocation.cli.experiment import build_system
    from adaptive_rb_collocation.driver.runs import run_adaptive
    from adaptive_rb_collocation.reports.moments import moment_errors, qmc_reference

    config = _load("table2")
    system = build_system(config)
    reference = qmc_reference(system, config.reference.count)
    runs = []
    for eps_rb in config.method.eps_rb:
        _, _, report = run_adaptive(system, _adaptive(config, eps_rb))
        runs.append((report, moment_errors(reference, report.mean, report.sd)))
    return runs


@pytest.mark.slow
@pytest.mark.integration
class TestBasisSizes:
    def test_fixed_anova_ladder(self):
        """1×4, ν = 1/20, ℓ = 3, p = 9: N_r near 4, 35, 90 and strictly increasing."""
        from adaptive_rb_collocation.cli.experiment import build_system
        from adaptive_rb_collocation.driver.runs import run_fixed_anova

        config = _load("table1")
        system = build_system(config)
        sizes = []
        for eps_rb in config.method.eps_rb:
            rb, _, _ = run_fixed_anova(system, level=3, p=9, eps_rb=eps_rb)
            sizes.append(rb.size)

        assert sizes == sorted(set(sizes)), f"N_r not strictly increasing: {sizes}"
        for size, expected in zip(sizes, (4, 35, 90), strict=True):
            assert 0.7 * expected <= size <= 1.3 * expected, f"N_r={size}, expected ≈{expected}"

    def test_adaptive_six_by_six(self, table2_runs):
        report, errors = table2_runs[-1]

        assert 0.6 * 157 <= report.n_basis <= 1.4 * 157, f"N_r={report.n_basis}"
        assert 2.756e-3 / 3 <= errors.e_mean <= 3 * 2.756e-3, f"e_mean={errors.e_mean:.3e}"
        assert 5.282e-2 / 3 <= errors.e_sd <= 3 * 5.282e-2, f"e_sd={errors.e_sd:.3e}"

    def test_errors_decrease_along_ladder(self, table2_runs):
        e_mean = [errors.e_mean for _, errors in table2_runs]
        e_sd = [errors.e_sd for _, errors in table2_runs]

        assert all(a > b for a, b in zip(e_mean, e_mean[1:], strict=False)), f"e_mean: {e_mean}"
        assert all(a > b for a, b in zip(e_sd, e_sd[1:], strict=False)), f"e_sd: {e_sd}"


@pytest.mark.slow
@pytest.mark.integration
class TestAnisotropy:
    def test_strip_means(self):
        """1×16 first-order run: the top and bottom strips rank in the top three."""
        from adaptive_rb_collocation.cli.experiment import build_system
        from adaptive_rb_collocation.driver.runs import run_adaptive

        config = _load("figure4")
        system = build_system(config)
        _, _, report = run_adaptive(system, _adaptive(config, config.method.eps_rb[0]))

        norms = {j: norm for j, (norm, _, _) in report.directions.items()}
        top3 = sorted(norms, key=norms.get, reverse=True)[:3]
        assert 0 in top3 and 15 in top3, f"Top directions {[j + 1 for j in top3]}"

    def test_top_row_gets_highest_order(self, table2_runs):
        report, _ = table2_runs[-1]
        orders = {j: p for j, (_, p, _) in report.directions.items()}
        top_row = [bx * 6 + 5 for bx in range(6)]

        assert max(orders[j] for j in top_row) == max(orders.values())

    def test_sparse_grid_families(self):
        """At matched N_r ≥ 40 the Gauss grids are at least as accurate as CC."""
        from adaptive_rb_collocation.cli.experiment import build_system
        from adaptive_rb_collocation.driver.runs import run_sparse_grid
        from adaptive_rb_collocation.reports.moments import moment_errors, qmc_reference

        config = _load("figure3")
        system = build_system(config)
        reference = qmc_reference(system, config.reference.count)
        eps_rb = config.method.eps_rb[0]

        curves = {}
        for family in ("gauss_legendre", "clenshaw_curtis"):
            _, report = run_sparse_grid(system, family, config.method.sparse_levels, eps_rb)
            curves[family] = [
                (n_basis, moment_errors(reference, mean, sd).e_mean)
                for _, n_basis, _, mean, sd in report.history
            ]

        gauss = [(n, e) for n, e in curves["gauss_legendre"] if n >= 40]
        if not gauss:
            pytest.skip("Gauss sparse grids never reached N_r ≥ 40")
        n_gl, e_gl = gauss[0]
        cc = [e for n, e in curves["clenshaw_curtis"] if n >= n_gl]
        if not cc:
            pytest.skip(f"Clenshaw-Curtis grids never reached N_r ≥ {n_gl}")
        assert e_gl <= cc[0], f"GL e_mean {e_gl:.3e} > CC e_mean {cc[0]:.3e}"


@pytest.mark.slow
@pytest.mark.integration
class TestPointCounts:
    def test_adaptive_visits_few_points(self):
        """8×8, ν = 1/20: the adaptive run visits < 10% of the fixed-order count."""
        from adaptive_rb_collocation.cli.experiment import build_system
        from adaptive_rb_collocation.collocation.anova_points import count_points
        from adaptive_rb_collocation.driver.runs import run_adaptive

        config = _load("table3")
        system = build_system(config)
        _, _, report = run_adaptive(system, _adaptive(config, config.method.eps_rb[0]))

        fixed = count_points(64, 2, 9, convention="table")
        assert report.visited_points < 0.1 * fixed, f"Visited {report.visited_points}"
        assert np.all(np.isfinite(report.mean))
