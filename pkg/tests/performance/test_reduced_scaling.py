"""
Performance Test: Online Cost Independent of the Grid

A reduced solve plus residual indicator only touches N_r-sized blocks, so
its cost should barely change when the finite-element grid is refined.
"""

import time

import numpy as np
import pytest

VELOCITY = (0.5, np.sqrt(3.0) / 2.0)


def _basis(n, count=12):
    from adaptive_rb_collocation.fem.affine import build_benchmark, full_solve
    from adaptive_rb_collocation.fem.mesh import build_mesh
    from adaptive_rb_collocation.reduced_basis.basis import ReducedBasis

    mesh = build_mesh(n, (2, 2))
    system = build_benchmark(mesh, 0.5, VELOCITY, np.tile([0.01, 1.0], (4, 1)))
    rb = ReducedBasis(system)
    for xi in np.random.default_rng(0).uniform(0.01, 1.0, size=(count, 4)):
        rb.add_snapshot(full_solve(system, xi))
    return rb


def _online_seconds(rb, trials=200):
    from adaptive_rb_collocation.reduced_basis.basis import reduced_solve, residual_indicator

    points = np.random.default_rng(1).uniform(0.01, 1.0, size=(trials, rb.system.dimension))
    start = time.perf_counter()
    for xi in points:
        residual_indicator(rb, xi, reduced_solve(rb, xi), expanded_only=True)
    return (time.perf_counter() - start) / trials


@pytest.mark.performance
class TestOnlineScaling:
    def test_online_cost_grid_independent(self):
        """Refining 16 → 32 (4× the dofs) should cost well under 3× online."""
        coarse = _online_seconds(_basis(16))
        fine = _online_seconds(_basis(32))
        ratio = fine / coarse

        print(f"\nOnline step: {coarse * 1e6:.1f} µs (n=16), {fine * 1e6:.1f} µs (n=32)")
        assert ratio < 3.0, f"Online cost grew {ratio:.2f}× with the grid"

    def test_reduced_solve_benchmark(self, benchmark):
        from adaptive_rb_collocation.reduced_basis.basis import reduced_solve

        rb = _basis(32)
        xi = rb.system.anchor
        coefficients = benchmark(reduced_solve, rb, xi)
        assert coefficients.shape == (rb.size,)
