"""
Q1 Finite-Element Assembly

Parameter-independent blocks for the stabilized convection-diffusion
operator on a StructuredMesh. Every element is an h×h square, so each block
type has one 4×4 local matrix shared by all elements; global matrices are
scattered in COO form and finalized to CSR.

Implements:
- assemble_diffusion_blocks(): K_m, unit-coefficient stiffness per subdomain
- assemble_convection(): Galerkin convection N for constant w
- assemble_sd_blocks(): streamline-diffusion S_m with δ factored out
- assemble_load(): consistent Q1 load (constant or callable f)
- assemble_operator(): monolithic assembly from per-element coefficients

References:
- docs/theory.md §1.2: Weak form and streamline diffusion
"""

import logging
from collections.abc import Callable

import numpy as np
import scipy.sparse as sp

from .mesh import StructuredMesh

logger = logging.getLogger(__name__)

# Reference square [-1,1]², counterclockwise corners
REF_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])

_G = 1.0 / np.sqrt(3.0)
GAUSS_POINTS = np.array([[-_G, -_G], [_G, -_G], [_G, _G], [-_G, _G]])
GAUSS_WEIGHTS = np.ones(4)

PARTITION_OF_UNITY_TOL = 1e-14
DROP_TOL = 1e-14


def shape_values(points: np.ndarray) -> np.ndarray:
    """Q1 basis values, shape (n_points, 4)."""
    return 0.25 * np.prod(1.0 + points[:, None, :] * REF_CORNERS[None, :, :], axis=2)


def shape_gradients(points: np.ndarray) -> np.ndarray:
    """Reference-coordinate Q1 gradients, shape (n_points, 4, 2)."""
    s = 1.0 + points[:, None, :] * REF_CORNERS[None, :, :]
    grads = np.empty(s.shape)
    grads[..., 0] = 0.25 * REF_CORNERS[None, :, 0] * s[..., 1]
    grads[..., 1] = 0.25 * REF_CORNERS[None, :, 1] * s[..., 0]
    return grads


def _quadrature_tables() -> tuple[np.ndarray, np.ndarray]:
    values = shape_values(GAUSS_POINTS)
    pou = np.abs(values.sum(axis=1) - 1.0).max()
    assert pou <= PARTITION_OF_UNITY_TOL, f"Q1 partition of unity violated: {pou:.2e}"
    return values, shape_gradients(GAUSS_POINTS)


def local_stiffness() -> np.ndarray:
    """∫_e ∇φ_a·∇φ_b on an h×h square (independent of h in 2-D)."""
    _, grads = _quadrature_tables()
    return np.einsum("q,qai,qbi->ab", GAUSS_WEIGHTS, grads, grads)


def local_convection(h: float, velocity: tuple[float, float]) -> np.ndarray:
    """∫_e (w·∇φ_b) φ_a; row a is the test function."""
    values, grads = _quadrature_tables()
    w = np.asarray(velocity, dtype=float)
    streamline = grads @ w  # (q, b)
    return 0.5 * h * np.einsum("q,qa,qb->ab", GAUSS_WEIGHTS, values, streamline)


def local_streamline(velocity: tuple[float, float]) -> np.ndarray:
    """∫_e (w·∇φ_a)(w·∇φ_b) on an h×h square."""
    _, grads = _quadrature_tables()
    streamline = grads @ np.asarray(velocity, dtype=float)
    return np.einsum("q,qa,qb->ab", GAUSS_WEIGHTS, streamline, streamline)


def _scatter(
    mesh: StructuredMesh, element_ids: np.ndarray, local: np.ndarray, scale=None
) -> sp.csr_matrix:
    """Scatter one local matrix (optionally scaled per element) into a global CSR."""
    conn = mesh.elements[element_ids]
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    if scale is None:
        data = np.tile(local.ravel(), len(element_ids))
    else:
        data = (np.asarray(scale)[:, None] * local.ravel()[None, :]).ravel()
    n = mesh.n_nodes
    return finalize(sp.coo_matrix((data, (rows, cols)), shape=(n, n)))


def finalize(matrix: sp.spmatrix) -> sp.csr_matrix:
    """
    Sum duplicates, drop round-off cancellations and sort column ids.

    Entries below DROP_TOL relative to the largest magnitude are removed.
    """
    A = sp.csr_matrix(matrix)
    A.sum_duplicates()
    if A.nnz:
        tol = DROP_TOL * np.abs(A.data).max()
        A.data[np.abs(A.data) <= tol] = 0.0
    A.eliminate_zeros()
    A.sort_indices()
    return A


def assemble_diffusion_blocks(mesh: StructuredMesh) -> list[sp.csr_matrix]:
    """K_m for m = 1..N_D, unit coefficient on the elements of D_m only."""
    Kloc = local_stiffness()
    blocks = [_scatter(mesh, mesh.elements_in(m), Kloc) for m in range(1, mesh.n_subdomains + 1)]
    logger.debug(f"Assembled {len(blocks)} diffusion blocks")
    return blocks


def assemble_convection(mesh: StructuredMesh, velocity: tuple[float, float]) -> sp.csr_matrix:
    """Galerkin convection matrix N_ab = ∫ (w·∇φ_b) φ_a."""
    Cloc = local_convection(mesh.h, velocity)
    return _scatter(mesh, np.arange(mesh.n_elements), Cloc)


def assemble_sd_blocks(
    mesh: StructuredMesh, velocity: tuple[float, float]
) -> list[sp.csr_matrix]:
    """S_m = Σ_{e⊂D_m} ∫_e (w·∇φ_a)(w·∇φ_b); δ_m is applied by the caller."""
    Sloc = local_streamline(velocity)
    return [_scatter(mesh, mesh.elements_in(m), Sloc) for m in range(1, mesh.n_subdomains + 1)]


def assemble_load(mesh: StructuredMesh, forcing: float | Callable = 1.0) -> np.ndarray:
    """
    Consistent Q1 load vector l_a = ∫ f φ_a.

    Args:
        mesh: StructuredMesh
        forcing: Constant f, or callable f(x1, x2) evaluated at Gauss points

    Returns:
        (N_h,) load vector
    """
    values, _ = _quadrature_tables()
    jac = 0.25 * mesh.h**2
    if callable(forcing):
        centers = mesh.element_centers()
        qx = centers[:, None, :] + 0.5 * mesh.h * GAUSS_POINTS[None, :, :]
        fq = np.asarray(forcing(qx[..., 0], qx[..., 1]), dtype=float)
        local = jac * np.einsum("q,eq,qa->ea", GAUSS_WEIGHTS, fq, values)
    else:
        per_node = jac * float(forcing) * (GAUSS_WEIGHTS @ values)
        local = np.broadcast_to(per_node, (mesh.n_elements, 4))
    load = np.zeros(mesh.n_nodes)
    np.add.at(load, mesh.elements.ravel(), np.asarray(local).ravel())
    return load


def assemble_operator(
    mesh: StructuredMesh,
    diffusion: np.ndarray,
    velocity: tuple[float, float],
    delta: np.ndarray,
) -> sp.csr_matrix:
    """
    Monolithic stabilized operator from per-element coefficients.

    A = Σ_e [a_e·K_e + N_e + δ_e·S_e]. Used to cross-check the affine
    expansion and for manufactured-solution studies.

    Args:
        mesh: StructuredMesh
        diffusion: (n_elements,) diffusion coefficient a on each element
        velocity: Constant convection field w
        delta: (n_elements,) streamline-diffusion scalar on each element
    """
    all_elements = np.arange(mesh.n_elements)
    A = _scatter(mesh, all_elements, local_stiffness(), scale=diffusion)
    if np.any(np.asarray(velocity) != 0):
        A = A + _scatter(mesh, all_elements, local_convection(mesh.h, velocity))
        if np.any(np.asarray(delta) != 0):
            A = A + _scatter(mesh, all_elements, local_streamline(velocity), scale=delta)
    return finalize(A)
