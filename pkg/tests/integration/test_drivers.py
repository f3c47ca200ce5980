"""
Integration Tests: Run Drivers

Sparse-grid, fixed-order and adaptive runs on a small 2×2 benchmark, checked
against direct full-solve quadrature and QMC reference moments.
"""

import itertools

import numpy as np
import pytest

VELOCITY = (0.5, np.sqrt(3.0) / 2.0)


def _system(n=8, partition=(2, 2), nu=0.5):
    from adaptive_rb_collocation.fem.affine import build_benchmark
    from adaptive_rb_collocation.fem.mesh import build_mesh

    mesh = build_mesh(n, partition)
    bounds = np.tile([0.01, 1.0], (mesh.n_subdomains, 1))
    return build_benchmark(mesh, nu, VELOCITY, bounds)


def _relative(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.mark.integration
class TestSparseGridRun:
    def test_history_per_level(self):
        from adaptive_rb_collocation.driver.runs import run_sparse_grid
        from adaptive_rb_collocation.fem.affine import full_solve

        system = _system()
        rb, report = run_sparse_grid(system, "gauss_legendre", 2, eps_rb=1e-6)

        assert [row[0] for row in report.history] == [0, 1, 2]
        sizes = [row[1] for row in report.history]
        assert sizes == sorted(sizes), "N_r must not shrink between levels"
        assert report.history[0][1] == 1 and report.history[0][2] == 1
        assert np.allclose(report.history[0][3], full_solve(system, system.anchor).field)
        assert np.all(report.history[0][4] == 0.0), "Level 0 has no spread"
        assert report.n_basis == rb.size == sizes[-1]
        assert report.visited_points == sum(s.visited_points for s in report.levels)

    def test_moments_approach_reference(self):
        from adaptive_rb_collocation.driver.runs import run_sparse_grid
        from adaptive_rb_collocation.reports.moments import moment_errors, qmc_reference

        system = _system()
        reference = qmc_reference(system, 1000)
        _, report = run_sparse_grid(system, "clenshaw_curtis", 3, eps_rb=1e-5)
        first = moment_errors(reference, report.history[1][3], report.history[1][4])
        last = moment_errors(reference, report.mean, report.sd)

        assert last.e_mean < 1e-2, f"e_mean={last.e_mean:.2e}"
        assert last.e_mean <= first.e_mean


@pytest.mark.integration
class TestFixedAnovaRun:
    """Fixed order p on every term, no truncation."""

    def test_term_and_point_counts(self):
        from adaptive_rb_collocation.driver.runs import run_fixed_anova

        system = _system()
        rb, state, report = run_fixed_anova(system, level=2, p=3, eps_rb=1e-4)

        assert len(state.terms) == 11, "∅ + 4 singletons + 6 pairs"
        assert report.visited_points == 67, "1 + 4·3 + 6·9"
        assert len(report.levels) == 2
        assert len(report.ledger) == rb.size - 1

    def test_matches_full_solve_anova(self):
        """With a tight ε_RB the moments equal a full-solve PCM-ANOVA."""
        from adaptive_rb_collocation.anova.decomposition import clamp_sqrt, kappa
        from adaptive_rb_collocation.collocation.anova_points import anova_points
        from adaptive_rb_collocation.driver.runs import run_fixed_anova
        from adaptive_rb_collocation.fem.affine import full_solve

        system = _system()
        M, level, p = system.dimension, 2, 3
        _, _, report = run_fixed_anova(system, level=level, p=p, eps_rb=1e-10)

        mean = np.zeros(system.mesh.n_nodes)
        second = np.zeros(system.mesh.n_nodes)
        for size in range(level + 1):
            c = kappa(M, size, level)
            for K in itertools.combinations(range(M), size):
                pts = anova_points(K, p, system.anchor, system.bounds)
                fields = np.array([full_solve(system, x).field for x in pts.points])
                mean += c * (pts.weights @ fields)
                second += c * (pts.weights @ fields**2)
        sd = clamp_sqrt(second - mean**2)

        assert _relative(report.mean, mean) < 1e-7
        assert _relative(report.sd, sd) < 1e-5

    def test_truncation_limits_next_level(self):
        from adaptive_rb_collocation.driver.runs import run_fixed_anova

        system = _system()
        _, state, report = run_fixed_anova(system, level=2, p=3, eps_rb=1e-4, eps_a=10.0)

        assert state.labels(2) == [], "No singleton is effective, so no pair is visited"
        assert len(state.labels(1)) == 4, "Computed terms stay in the expansion"
        assert len(report.levels) == 1


@pytest.mark.integration
class TestAdaptiveRun:
    """Structural invariants of the adaptive algorithm."""

    def _config(self, **overrides):
        from adaptive_rb_collocation.driver.runs import AdaptiveConfig

        settings = dict(eps_rb=1e-3, eps_a=5e-4, eps_p=5e-4, l0=1, l_max=2, p_max=9)
        settings.update(overrides)
        return AdaptiveConfig(**settings)

    def test_invariants(self):
        from adaptive_rb_collocation.driver.runs import run_adaptive

        system = _system()
        config = self._config()
        rb, state, report = run_adaptive(system, config)

        assert rb.orthonormality_error() < 1e-10
        assert len(report.ledger) == rb.size - 1, "Every non-anchor snapshot is in the ledger"
        assert report.n_basis == rb.size
        for K, term in state.terms.items():
            if not K:
                continue
            assert term.order % 2 == 1 and config.p0 <= term.order <= config.p_max
            for r in range(len(K)):
                for S in itertools.combinations(K, r):
                    assert S in state.terms, f"{K} accepted without its subset {S}"
        labels = {rec.label for rec in rb.records}
        assert labels <= set(state.terms), "Snapshots of discarded visits must be removed"
        assert set(report.directions) == set(range(system.dimension))

    def test_moments_against_reference(self):
        """
        The gap to the QMC mean is the level-2 truncation on M = 4, not the
        adaptive refinement: the run sits close to a fixed p = 9 level-2 expansion.
        """
        from adaptive_rb_collocation.driver.runs import run_adaptive, run_fixed_anova
        from adaptive_rb_collocation.reports.moments import moment_errors, qmc_reference

        system = _system()
        reference = qmc_reference(system, 1000)
        _, _, report = run_adaptive(system, self._config(eps_rb=1e-4, eps_a=5e-5, eps_p=5e-5))
        _, _, fixed = run_fixed_anova(system, level=2, p=9, eps_rb=1e-8)
        errors = moment_errors(reference, report.mean, report.sd)

        gap = _relative(report.mean, fixed.mean)
        assert gap < 5e-3, f"Adaptive mean is {gap:.2e} away from the level-2 expansion"
        assert errors.e_mean < 2.5e-2, f"e_mean={errors.e_mean:.2e}"
        assert errors.e_sd < 2e-1, f"e_sd={errors.e_sd:.2e}"

    def test_excluded_visit_restores_previous_state(self):
        """A visit failing saturation leaves basis, blocks and term bit-identical."""
        from adaptive_rb_collocation.driver import runs
        from adaptive_rb_collocation.driver.report import RunReport
        from adaptive_rb_collocation.reduced_basis.basis import ReducedBasis

        system = _system()
        rb = ReducedBasis(system)
        report = RunReport("adaptive")
        state = runs._seed(rb, report, 1e-12)
        config = self._config(eps_rb=1e-12, eps_a=1e-12, eps_p=1e6)
        orders = {(0,): 3}
        args = (state, rb, report, config, system.anchor, system.bounds, 9)

        assert runs._visit((0,), orders, *args) is True
        size, term = rb.size, state.terms[(0,)]
        basis, blocks = rb.basis.copy(), rb.reduced_operators().copy()
        forcings, records = rb.reduced_forcings().copy(), list(rb.records)

        assert runs._visit((0,), orders, *args) is False, "ρ < ε_p must exclude the visit"
        assert rb.size == size
        assert np.array_equal(rb.basis, basis)
        assert np.array_equal(rb.reduced_operators(), blocks)
        assert np.array_equal(rb.reduced_forcings(), forcings)
        assert rb.records == records
        assert state.terms[(0,)] is term, "Previous term must be kept"

    def test_huge_eps_a_keeps_anchor_only(self):
        from adaptive_rb_collocation.driver.runs import run_adaptive
        from adaptive_rb_collocation.fem.affine import full_solve

        system = _system()
        rb, state, report = run_adaptive(system, self._config(eps_a=1e6))

        assert list(state.terms) == [()]
        assert rb.size == 1
        assert np.allclose(report.mean, full_solve(system, system.anchor).field)
        assert np.all(report.sd == 0.0)

    def test_parent_cap(self):
        from adaptive_rb_collocation.driver.runs import run_adaptive

        system = _system()
        _, state, _ = run_adaptive(
            system, self._config(eps_rb=1e-5, eps_a=1e-6, eps_p=1e-6, cap_order_by_parent=True)
        )
        top_first = max(t.order for K, t in state.terms.items() if len(K) == 1)
        for K, term in state.terms.items():
            if len(K) == 2:
                assert term.order <= top_first

    def test_solver_failure_aborts_with_partial_report(self, monkeypatch):
        import adaptive_rb_collocation.reduced_basis.greedy as greedy
        from adaptive_rb_collocation.driver.report import RunAborted
        from adaptive_rb_collocation.driver.runs import run_adaptive
        from adaptive_rb_collocation.fem.solver import SolverError

        calls = {"n": 0}
        real = greedy.full_solve

        def flaky(system, xi):
            calls["n"] += 1
            if calls["n"] > 2:
                raise SolverError("zero pivot", pivot=0.0)
            return real(system, xi)

        monkeypatch.setattr(greedy, "full_solve", flaky)
        with pytest.raises(RunAborted) as excinfo:
            run_adaptive(_system(), self._config())

        report = excinfo.value.report
        assert calls["n"] == 3
        assert report.partial is True
        assert 1 <= report.n_basis <= 3, "At most the anchor and two successful solves"

    def test_anchor_failure(self, monkeypatch):
        import adaptive_rb_collocation.driver.runs as runs
        from adaptive_rb_collocation.driver.report import RunAborted
        from adaptive_rb_collocation.fem.solver import SolverError

        def broken(system, xi):
            raise SolverError("singular")

        monkeypatch.setattr(runs, "full_solve", broken)
        with pytest.raises(RunAborted) as excinfo:
            runs.run_fixed_anova(_system(), level=1, p=3, eps_rb=1e-3)
        assert excinfo.value.report.n_basis == 0
