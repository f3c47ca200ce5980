"""
Unit Tests: Smolyak Sparse Grids
"""

import itertools

import numpy as np
import pytest


def _uniform_moment(k, a, b):
    return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * (b - a))


@pytest.mark.unit
class TestCompositions:
    def test_counts(self):
        from math import comb

        from adaptive_rb_collocation.collocation.sparse_grid import compositions

        for total, parts in [(3, 2), (5, 3), (6, 4)]:
            items = list(compositions(total, parts))
            assert len(items) == comb(total - 1, parts - 1)
            assert all(sum(c) == total and min(c) >= 1 for c in items)
            assert items == sorted(items), "Compositions must be lexicographic"

    def test_too_small_total(self):
        from adaptive_rb_collocation.collocation.sparse_grid import compositions

        assert list(compositions(2, 3)) == []

    def test_smolyak_coefficient(self):
        from adaptive_rb_collocation.collocation.sparse_grid import smolyak_coefficient

        # M = 3, ℓ = 2: |i| = 5 → +1, |i| = 4 → −2, |i| = 3 → +1
        assert smolyak_coefficient(3, 2, (1, 2, 2)) == 1
        assert smolyak_coefficient(3, 2, (1, 1, 2)) == -2
        assert smolyak_coefficient(3, 2, (1, 1, 1)) == 1


@pytest.mark.unit
class TestSparseGrid:
    """Point counts, weights and exactness."""

    def test_level_zero_is_anchor(self):
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        bounds = np.tile([0.01, 1.0], (5, 1))
        for family in ("gauss_legendre", "clenshaw_curtis"):
            grid = sparse_grid(5, 0, family, bounds)
            assert len(grid) == 1
            assert np.allclose(grid.points[0], 0.505)
            assert grid.weights[0] == pytest.approx(1.0)

    def test_cc_level_one_two_dims(self):
        """CC, M = 2, ℓ = 1: the midpoint plus four edge midpoints."""
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        grid = sparse_grid(2, 1, "clenshaw_curtis")

        assert len(grid) == 5, f"Expected 5 points, got {len(grid)}"
        assert grid.weights.sum() == pytest.approx(1.0, abs=1e-14)
        expected = {(0.0, 0.0), (-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)}
        assert {tuple(np.round(x, 12) + 0.0) for x in grid.points} == expected

    def test_cc_nested_growth(self):
        """Nested CC grids of level ℓ contain every point of level ℓ − 1."""
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        coarse = sparse_grid(3, 2, "clenshaw_curtis")
        fine = sparse_grid(3, 3, "clenshaw_curtis")
        fine_keys = {tuple(np.round(x, 12) + 0.0) for x in fine.points}

        assert all(tuple(np.round(x, 12) + 0.0) in fine_keys for x in coarse.points)

    def test_weights_sum_to_one(self):
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        bounds = np.tile([0.01, 1.0], (4, 1))
        for family, level in itertools.product(("gauss_legendre", "clenshaw_curtis"), (1, 2, 3)):
            grid = sparse_grid(4, level, family, bounds)
            assert grid.weights.sum() == pytest.approx(1.0, abs=1e-12), f"{family} ℓ={level}"

    def test_gauss_total_degree_exactness(self):
        """GL growth m_i = i: level ℓ integrates total degree 2ℓ + 1 exactly."""
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        a, b = 0.01, 1.0
        M, level = 3, 2
        grid = sparse_grid(M, level, "gauss_legendre", np.tile([a, b], (M, 1)))

        for powers in itertools.product(range(2 * level + 2), repeat=M):
            if sum(powers) > 2 * level + 1:
                continue
            values = np.prod(grid.points ** np.array(powers), axis=1)
            exact = np.prod([_uniform_moment(k, a, b) for k in powers])
            assert grid.integrate(values) == pytest.approx(exact, rel=1e-11), (
                f"Monomial {powers} not integrated exactly"
            )

    def test_merge_map_and_labels(self):
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        grid = sparse_grid(2, 2, "clenshaw_curtis")

        assert len(grid.labels) == len(grid)
        assert grid.merge_map.max() == len(grid) - 1
        assert len(grid.merge_map) > len(grid), "Nested CC grid should merge points"

    def test_custom_growth(self):
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        # M = 1, ℓ = 2 keeps only i = 3
        grid = sparse_grid(1, 2, "gauss_legendre", growth=lambda i: 2 * i - 1)
        assert len(grid) == 5

    def test_negative_level(self):
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        with pytest.raises(ValueError):
            sparse_grid(2, -1)

    def test_to_csv(self, tmp_path):
        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        grid = sparse_grid(2, 1, "clenshaw_curtis")
        path = grid.to_csv(tmp_path / "points.csv")
        lines = path.read_text().splitlines()

        assert lines[0] == "xi_1,xi_2,weight"
        assert len(lines) == 1 + len(grid)


@pytest.mark.unit
class TestMergePoints:
    def test_duplicates_accumulate_weight(self):
        from adaptive_rb_collocation.collocation.sparse_grid import merge_points

        points = np.array([[0.0, 0.5], [0.0, 0.5 + 1e-15], [1.0, 0.0]])
        weights = np.array([0.25, 0.25, 0.5])
        merged = merge_points(points, weights, np.tile([-1.0, 1.0], (2, 1)), ["a", "b", "c"])

        assert len(merged) == 2
        assert np.allclose(merged.weights, [0.5, 0.5])
        assert merged.labels == ["a", "c"]
        assert merged.merge_map.tolist() == [0, 0, 1]


@pytest.mark.unit
class TestAgainstChaospy:
    """Smolyak combination matches chaospy's sparse quadrature on the same rules."""

    @pytest.mark.parametrize(
        "family,rule,growth",
        [("gauss_legendre", "gaussian", False), ("clenshaw_curtis", "clenshaw_curtis", True)],
    )
    def test_same_integral(self, family, rule, growth):
        import chaospy as cp

        from adaptive_rb_collocation.collocation.sparse_grid import sparse_grid

        a, b, M = 0.01, 1.0, 3
        slope = np.array([0.3, -0.7, 0.5])
        joint = cp.J(*[cp.Uniform(a, b) for _ in range(M)])

        for level in (1, 2, 3):
            grid = sparse_grid(M, level, family, np.tile([a, b], (M, 1)))
            nodes, weights = cp.generate_quadrature(
                level, joint, rule=rule, sparse=True, growth=growth
            )
            ours = grid.integrate(np.exp(grid.points @ slope))
            theirs = weights @ np.exp(slope @ nodes)
            assert ours == pytest.approx(theirs, rel=1e-12), f"{family} ℓ={level}"
