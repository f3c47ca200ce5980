"""
Affine Parameterized System

A_ξ = Σ_i φ_i(ξ) A_i and f_ξ = Σ_j ψ_j(ξ) f_j on the interior dofs, with
the Dirichlet lifting folded into the forcing terms.

Implements:
- CoefficientFn: serializable scalar coefficient descriptor
- AffineSystem: operator/forcing terms, parameter box Γ, lifting
- build_benchmark(): 2M+1 operator terms, 2M+2 forcing terms
- assemble_at(): exact linear combination on a shared sparsity pattern
- full_solve(): Snapshot with lifting re-added

References:
- docs/theory.md §1.4: Affine decomposition
"""

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import (
    assemble_convection,
    assemble_diffusion_blocks,
    assemble_load,
    assemble_sd_blocks,
)
from .mesh import DirichletLifting, StructuredMesh, build_lifting
from .solver import SolverError, solve_sparse

logger = logging.getLogger(__name__)

COEFFICIENT_KINDS = ("constant", "linear", "sd_delta")


class ParameterError(ValueError):
    """Raised for ξ outside the parameter box Γ."""


def sd_delta(xi_m: float, nu: float, speed: float, h: float) -> float:
    """
    Streamline-diffusion scalar for one subdomain.

    δ = h/(2|w|)·(1 − 1/P) if P = |w|h/(2νξ_m) > 1, else 0.
    """
    if speed == 0.0:
        return 0.0
    diffusion = nu * xi_m
    if diffusion <= 0.0:
        return h / (2.0 * speed)
    peclet = speed * h / (2.0 * diffusion)
    if peclet <= 1.0:
        return 0.0
    return h / (2.0 * speed) * (1.0 - 1.0 / peclet)


@dataclass(frozen=True)
class CoefficientFn:
    """
    Closed description of one scalar coefficient φ(ξ).

    kind:
        constant: φ = value
        linear:   φ = scale·ξ_m
        sd_delta: φ = δ(ξ_m; ν, |w|, h), or δ(frozen_at) when frozen
    """

    kind: str
    value: float = 1.0
    direction: int = -1
    scale: float = 1.0
    nu: float = 0.0
    speed: float = 0.0
    h: float = 0.0
    frozen_at: float | None = None

    def __post_init__(self):
        if self.kind not in COEFFICIENT_KINDS:
            raise ValueError(f"Unknown coefficient kind: {self.kind}")

    def __call__(self, xi: np.ndarray) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "linear":
            return self.scale * float(xi[self.direction])
        x = self.frozen_at if self.frozen_at is not None else float(xi[self.direction])
        return sd_delta(x, self.nu, self.speed, self.h)

    def describe(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "CoefficientFn":
        return cls(**data)


def evaluate(coefficients: tuple[CoefficientFn, ...], xi: np.ndarray) -> np.ndarray:
    return np.array([c(xi) for c in coefficients])


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Full solution at one parameter point."""

    xi: np.ndarray
    interior: np.ndarray
    field: np.ndarray


@dataclass(eq=False)
class AffineSystem:
    """
    Parameterized interior-dof system.

    Treated as immutable after build_benchmark(); concurrent reads are safe.

    Attributes:
        mesh: StructuredMesh
        lifting: DirichletLifting
        operator_coeffs / operators: n̂_a terms (φ_i, A_i)
        forcing_coeffs / forcings: n̂_f terms (ψ_j, f_j)
        bounds: (M, 2) parameter box Γ
        nu: Diffusion scale ν
        velocity: Convection field w
    """

    mesh: StructuredMesh
    lifting: DirichletLifting
    operator_coeffs: tuple[CoefficientFn, ...]
    operators: tuple[sp.csr_matrix, ...]
    forcing_coeffs: tuple[CoefficientFn, ...]
    forcings: tuple[np.ndarray, ...]
    bounds: np.ndarray
    nu: float
    velocity: tuple[float, float]
    _pattern: sp.csr_matrix = field(init=False, repr=False)
    _pattern_data: np.ndarray = field(init=False, repr=False)
    _forcing_matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float)
        self._pattern, self._pattern_data = _union_pattern(self.operators)
        self._forcing_matrix = np.column_stack(self.forcings)

    @property
    def dimension(self) -> int:
        return self.bounds.shape[0]

    @property
    def n_interior(self) -> int:
        return self.lifting.n_interior

    @property
    def n_operator_terms(self) -> int:
        return len(self.operators)

    @property
    def n_forcing_terms(self) -> int:
        return len(self.forcings)

    @property
    def anchor(self) -> np.ndarray:
        """Mean of the uniform density: the box midpoint."""
        return self.bounds.mean(axis=1)

    def check_parameter(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=float).reshape(-1)
        if xi.shape[0] != self.dimension:
            raise ParameterError(f"Expected ξ of dimension {self.dimension}, got {xi.shape[0]}")
        slack = 1e-12 * np.maximum(np.abs(self.bounds).max(axis=1), 1.0)
        outside = (xi < self.bounds[:, 0] - slack) | (xi > self.bounds[:, 1] + slack)
        if np.any(outside):
            m = int(np.flatnonzero(outside)[0])
            raise ParameterError(
                f"ξ_{m + 1} = {xi[m]:.6g} outside Γ_{m + 1} = "
                f"[{self.bounds[m, 0]:.6g}, {self.bounds[m, 1]:.6g}]"
            )
        return xi

    def operator_values(self, xi: np.ndarray) -> np.ndarray:
        return evaluate(self.operator_coeffs, xi)

    def forcing_values(self, xi: np.ndarray) -> np.ndarray:
        return evaluate(self.forcing_coeffs, xi)

    def describe(self) -> dict:
        return {
            "dimension": self.dimension,
            "n_interior": self.n_interior,
            "nu": self.nu,
            "velocity": list(self.velocity),
            "operator_terms": [c.describe() for c in self.operator_coeffs],
            "forcing_terms": [c.describe() for c in self.forcing_coeffs],
        }


def _union_pattern(operators) -> tuple[sp.csr_matrix, np.ndarray]:
    """Shared CSR pattern of all A_i and each A_i's data aligned to it."""
    n = operators[0].shape[0]
    pattern = sp.csr_matrix((n, n))
    for A in operators:
        pattern = pattern + abs(A)
    pattern.sort_indices()
    rows = np.repeat(np.arange(n), np.diff(pattern.indptr))
    keys = rows.astype(np.int64) * n + pattern.indices

    data = np.zeros((len(operators), pattern.nnz))
    for i, A in enumerate(operators):
        coo = A.tocoo()
        pos = np.searchsorted(keys, coo.row.astype(np.int64) * n + coo.col)
        data[i, pos] = coo.data
    return pattern, data


def build_benchmark(
    mesh: StructuredMesh,
    nu: float,
    velocity: tuple[float, float],
    bounds: np.ndarray,
    forcing: float = 1.0,
    freeze_sd_at_anchor: bool = False,
) -> AffineSystem:
    """
    Assemble the affine benchmark system.

    Operator terms, in order: ν·ξ_m·K_m (m = 1..M), N, δ_m(ξ_m)·S_m (m = 1..M).
    Forcing terms: the load f, then −A_i u_g for every operator term with
    the same coefficient φ_i.

    Args:
        mesh: StructuredMesh with M subdomains
        nu: Diffusion scale ν
        velocity: Constant convection field w
        bounds: (M, 2) box Γ
        forcing: Constant source f
        freeze_sd_at_anchor: Evaluate δ_m once at the anchor c_m

    Returns:
        AffineSystem
    """
    bounds = np.asarray(bounds, dtype=float)
    M = mesh.n_subdomains
    if bounds.shape != (M, 2):
        raise ParameterError(f"Γ must have shape ({M}, 2) for {M} subdomains, got {bounds.shape}")

    lifting = build_lifting(mesh)
    speed = float(np.hypot(*velocity))
    anchor = bounds.mean(axis=1)

    full_ops = list(assemble_diffusion_blocks(mesh))
    coeffs = [CoefficientFn("linear", direction=m, scale=nu) for m in range(M)]
    full_ops.append(assemble_convection(mesh, velocity))
    coeffs.append(CoefficientFn("constant", value=1.0))
    full_ops.extend(assemble_sd_blocks(mesh, velocity))
    coeffs.extend(
        CoefficientFn(
            "sd_delta",
            direction=m,
            nu=nu,
            speed=speed,
            h=mesh.h,
            frozen_at=float(anchor[m]) if freeze_sd_at_anchor else None,
        )
        for m in range(M)
    )

    inner = lifting.interior
    operators = tuple(sp.csr_matrix(A[inner][:, inner]) for A in full_ops)
    load = assemble_load(mesh, forcing)[inner]
    forcings = (load,) + tuple(-(A @ lifting.u_g)[inner] for A in full_ops)
    forcing_coeffs = (CoefficientFn("constant", value=1.0),) + tuple(coeffs)

    system = AffineSystem(
        mesh=mesh,
        lifting=lifting,
        operator_coeffs=tuple(coeffs),
        operators=operators,
        forcing_coeffs=forcing_coeffs,
        forcings=forcings,
        bounds=bounds,
        nu=nu,
        velocity=tuple(velocity),
    )
    logger.info(
        f"Benchmark system: M={M}, n̂_a={system.n_operator_terms}, "
        f"n̂_f={system.n_forcing_terms}, interior dofs={system.n_interior}"
    )
    return system


def assemble_at(system: AffineSystem, xi: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    """
    A_ξ and f_ξ as exact linear combinations of the stored terms.

    Raises:
        ParameterError: If ξ lies outside Γ
    """
    xi = system.check_parameter(xi)
    phi = system.operator_values(xi)
    psi = system.forcing_values(xi)
    P = system._pattern
    A = sp.csr_matrix((phi @ system._pattern_data, P.indices, P.indptr), shape=P.shape)
    f = system._forcing_matrix @ psi
    return A, f


def full_solve(system: AffineSystem, xi: np.ndarray) -> Snapshot:
    """
    Full finite-element solve at ξ.

    Raises:
        ParameterError: If ξ lies outside Γ
        SolverError: Propagated from solve_sparse, annotated with ξ
    """
    A, f = assemble_at(system, xi)
    try:
        u = solve_sparse(A, f)
    except SolverError as e:
        logger.error(f"Full solve failed at ξ={np.array2string(np.asarray(xi), precision=4)}")
        raise SolverError(
            f"{e} at ξ={np.asarray(xi).tolist()}", pivot=e.pivot, residual=e.residual
        ) from e
    xi = np.asarray(xi, dtype=float).copy()
    return Snapshot(xi=xi, interior=u, field=system.lifting.extend(u))
