"""
Unit Tests: Affine Parameterized System
"""

import numpy as np
import pytest

VELOCITY = (0.5, np.sqrt(3.0) / 2.0)


def _system(n=8, partition=(2, 2), nu=0.5, freeze=False):
    from adaptive_rb_collocation.fem.affine import build_benchmark
    from adaptive_rb_collocation.fem.mesh import build_mesh

    mesh = build_mesh(n, partition)
    bounds = np.tile([0.01, 1.0], (mesh.n_subdomains, 1))
    return build_benchmark(mesh, nu, VELOCITY, bounds, freeze_sd_at_anchor=freeze)


@pytest.mark.unit
class TestStreamlineDelta:
    """δ(ξ_m) switches on above unit element Peclet number."""

    def test_below_unit_peclet(self):
        from adaptive_rb_collocation.fem.affine import sd_delta

        # P = 1·(1/8)/(2·0.5·1) = 0.125
        assert sd_delta(1.0, 0.5, 1.0, 0.125) == 0.0

    def test_above_unit_peclet(self):
        from adaptive_rb_collocation.fem.affine import sd_delta

        h = 1.0 / 32.0
        peclet = h / (2 * 0.5 * 0.01)
        expected = h / 2.0 * (1.0 - 1.0 / peclet)
        assert sd_delta(0.01, 0.5, 1.0, h) == pytest.approx(expected, rel=1e-14)

    def test_continuous_at_unit_peclet(self):
        from adaptive_rb_collocation.fem.affine import sd_delta

        h, nu = 0.1, 0.05
        xi_star = h / (2 * nu)  # P = 1
        assert sd_delta(xi_star * (1 - 1e-9), nu, 1.0, h) < 1e-8
        assert sd_delta(xi_star, nu, 1.0, h) == 0.0


@pytest.mark.unit
class TestCoefficientFn:
    def test_kinds(self):
        from adaptive_rb_collocation.fem.affine import CoefficientFn

        xi = np.array([0.2, 0.7])
        assert CoefficientFn("constant", value=3.0)(xi) == 3.0
        assert CoefficientFn("linear", direction=1, scale=0.5)(xi) == pytest.approx(0.35)

    def test_frozen_ignores_xi(self):
        from adaptive_rb_collocation.fem.affine import CoefficientFn

        c = CoefficientFn("sd_delta", direction=0, nu=0.05, speed=1.0, h=0.1, frozen_at=0.05)
        assert c(np.array([0.01])) == c(np.array([1.0])) > 0.0

    def test_round_trip_descriptor(self):
        from adaptive_rb_collocation.fem.affine import CoefficientFn

        c = CoefficientFn("sd_delta", direction=2, nu=0.5, speed=1.0, h=0.25)
        assert CoefficientFn.from_dict(c.describe()) == c

    def test_unknown_kind(self):
        from adaptive_rb_collocation.fem.affine import CoefficientFn

        with pytest.raises(ValueError):
            CoefficientFn("quadratic")


@pytest.mark.unit
class TestAffineSystem:
    """Term counts, affine exactness, parameter checks and full solves."""

    def test_term_counts(self):
        system = _system(partition=(2, 2))

        assert system.dimension == 4
        assert system.n_operator_terms == 2 * 4 + 1
        assert system.n_forcing_terms == 2 * 4 + 2
        assert np.allclose(system.anchor, 0.505)

    def test_affine_matches_monolithic(self):
        """A_ξ and f_ξ equal a direct assembly with per-element coefficients."""
        from adaptive_rb_collocation.fem.affine import assemble_at, sd_delta
        from adaptive_rb_collocation.fem.assembly import assemble_load, assemble_operator

        system = _system(n=8, partition=(2, 2), nu=0.05)
        mesh = system.mesh
        xi = np.array([0.02, 0.4, 0.9, 0.05])
        speed = float(np.hypot(*VELOCITY))

        sub = mesh.element_subdomain - 1
        diffusion = system.nu * xi[sub]
        delta = np.array([sd_delta(x, system.nu, speed, mesh.h) for x in xi])[sub]
        full = assemble_operator(mesh, diffusion, VELOCITY, delta)
        inner = system.lifting.interior
        A_ref = full[inner][:, inner]
        f_ref = assemble_load(mesh, 1.0)[inner] - (full @ system.lifting.u_g)[inner]

        A, f = assemble_at(system, xi)
        scale = abs(A_ref).max()
        assert abs(A - A_ref).max() <= 1e-12 * scale, "Affine operator differs from monolithic"
        assert np.allclose(f, f_ref, rtol=1e-12, atol=1e-14), "Affine forcing differs"

    def test_operator_pattern_symmetric(self):
        from adaptive_rb_collocation.fem.affine import assemble_at

        system = _system()
        A, _ = assemble_at(system, system.anchor)
        pattern = A.copy()
        pattern.data[:] = 1.0
        assert (pattern - pattern.T).nnz == 0

    def test_parameter_outside_box(self):
        from adaptive_rb_collocation.fem.affine import ParameterError, assemble_at

        system = _system()
        with pytest.raises(ParameterError):
            assemble_at(system, np.array([0.5, 0.5, 0.5, 1.5]))
        with pytest.raises(ParameterError):
            assemble_at(system, np.array([0.5, 0.5]))

    def test_anchor_solution_range(self):
        """Boundary values are reproduced and the interior stays near [0, 1]."""
        from adaptive_rb_collocation.fem.affine import full_solve

        system = _system(n=16, partition=(2, 2))
        snapshot = full_solve(system, system.anchor)
        field = snapshot.field
        boundary = system.mesh.boundary_nodes

        assert np.array_equal(field[boundary], system.lifting.boundary_values)
        assert field.min() >= -0.05, f"Undershoot {field.min():.3f}"
        assert field.max() <= 5.0, f"Overshoot {field.max():.3f}"

    def test_frozen_sd_is_parameter_independent(self):
        system = _system(nu=0.05, freeze=True)
        M = system.dimension
        low = system.operator_values(np.full(M, 0.01))
        high = system.operator_values(np.full(M, 1.0))

        assert np.array_equal(low[M + 1 :], high[M + 1 :])

    def test_describe(self):
        system = _system()
        info = system.describe()

        assert info["dimension"] == 4
        assert len(info["operator_terms"]) == system.n_operator_terms
        assert info["operator_terms"][4]["kind"] == "constant"
