"""
Structured Q1 Mesh and Dirichlet Lifting

Uniform quadrilateral grid on D = [-1, 1]² with an element → subdomain map
for the piecewise-constant diffusion coefficient.

Implements:
- StructuredMesh: nodes, counterclockwise connectivity, subdomain labels
- build_mesh(): grid + rectangular partition
- DirichletLifting: nodal g_D, lifting vector u_g, interior dof map

References:
- docs/theory.md §1: Benchmark problem and discretization
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    """Raised when a grid/partition combination is invalid."""


@dataclass(frozen=True, eq=False)
class StructuredMesh:
    """
    Uniform n×n quadrilateral grid on [-1, 1]².

    Node (i, j) sits at (-1 + i·h, -1 + j·h) and has id j·(n+1) + i.
    Element (ix, iy) has id iy·n + ix and nodes listed counterclockwise
    from its bottom-left corner.

    Attributes:
        n_cells_per_side: Cells along each axis
        partition: (blocks along x1, blocks along x2); (1, 16) is 16 horizontal strips
        nodes: (N_h, 2) node coordinates
        elements: (n², 4) node ids per element
        element_subdomain: (n²,) subdomain index m ∈ {1..N_D}
        h: Mesh width 2/n
        boundary_nodes: Sorted ids of nodes on ∂D
    """

    n_cells_per_side: int
    partition: tuple[int, int]
    nodes: np.ndarray
    elements: np.ndarray
    element_subdomain: np.ndarray
    h: float
    boundary_nodes: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def n_subdomains(self) -> int:
        return self.partition[0] * self.partition[1]

    def elements_in(self, m: int) -> np.ndarray:
        """Element ids of subdomain m (1-based)."""
        return np.flatnonzero(self.element_subdomain == m)

    def element_centers(self) -> np.ndarray:
        return self.nodes[self.elements].mean(axis=1)

    def boundary_classification(self, velocity: tuple[float, float]) -> dict[str, np.ndarray]:
        """
        Split boundary nodes into inflow (w·n < 0) and outflow (w·n ≥ 0).

        Corner nodes take the inflow label if either adjacent side is inflow.
        """
        w = np.asarray(velocity, dtype=float)
        x = self.nodes[self.boundary_nodes]
        inflow = np.zeros(len(x), dtype=bool)
        for axis in (0, 1):
            on_low = np.isclose(x[:, axis], -1.0)
            on_high = np.isclose(x[:, axis], 1.0)
            # outward normal is -e_axis on the low side, +e_axis on the high side
            inflow |= on_low & (w[axis] > 0)
            inflow |= on_high & (w[axis] < 0)
        return {
            "inflow": self.boundary_nodes[inflow],
            "outflow": self.boundary_nodes[~inflow],
        }

    def __repr__(self) -> str:
        return (
            f"StructuredMesh(n={self.n_cells_per_side}, partition={self.partition}, "
            f"nodes={self.n_nodes}, elements={self.n_elements})"
        )


def build_mesh(n: int, partition: tuple[int, int] = (1, 1)) -> StructuredMesh:
    """
    Build the uniform grid and assign every element to a subdomain.

    Subdomains are counted column-major from the bottom-left block:
    m = bx·P2 + by + 1, so along a column of blocks the index increases
    with x2.

    Args:
        n: Cells per side (≥ 2)
        partition: (P1, P2) blocks along x1 and x2; each must divide n

    Returns:
        StructuredMesh

    Raises:
        MeshError: If n < 2 or a block count does not divide n
    """
    p1, p2 = int(partition[0]), int(partition[1])
    if n < 2:
        raise MeshError(f"Grid needs at least 2 cells per side, got n={n}")
    if p1 < 1 or p2 < 1 or n % p1 != 0 or n % p2 != 0:
        raise MeshError(
            f"Partition {p1}×{p2} does not divide a {n}×{n} grid into equal rectangles"
        )

    h = 2.0 / n
    coords = -1.0 + h * np.arange(n + 1)
    xx, yy = np.meshgrid(coords, coords)  # row j ↔ x2
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    iy, ix = np.divmod(np.arange(n * n), n)
    base = iy * (n + 1) + ix
    elements = np.column_stack([base, base + 1, base + n + 2, base + n + 1])

    bx = ix // (n // p1)
    by = iy // (n // p2)
    element_subdomain = bx * p2 + by + 1

    j, i = np.divmod(np.arange((n + 1) ** 2), n + 1)
    on_boundary = (i == 0) | (i == n) | (j == 0) | (j == n)

    mesh = StructuredMesh(
        n_cells_per_side=n,
        partition=(p1, p2),
        nodes=nodes,
        elements=elements,
        element_subdomain=element_subdomain,
        h=h,
        boundary_nodes=np.flatnonzero(on_boundary),
    )
    logger.debug(f"Built {mesh!r}")
    return mesh


@dataclass(frozen=True, eq=False)
class DirichletLifting:
    """
    Nodal interpolation of g_D and the lifting u_g.

    Attributes:
        boundary_values: g_D at mesh.boundary_nodes
        u_g: (N_h,) lifting vector, zero at interior nodes
        interior: (N_interior,) node ids of the free dofs
    """

    boundary_values: np.ndarray
    u_g: np.ndarray
    interior: np.ndarray

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    def extend(self, interior_values: np.ndarray) -> np.ndarray:
        """Scatter interior values into a full nodal field and add u_g."""
        field = self.u_g.copy()
        field[self.interior] += interior_values
        return field

    def restrict(self, field: np.ndarray) -> np.ndarray:
        return field[self.interior]


def build_lifting(mesh: StructuredMesh) -> DirichletLifting:
    """
    Lifting for the benchmark boundary data.

    g_D = 1 on {x1 = -1} ∪ {-1 ≤ x1 ≤ 0, x2 = -1}, 0 elsewhere on ∂D.
    Both corner nodes (0, -1) and (-1, 1) take the value 1.
    """
    n = mesh.n_cells_per_side
    j, i = np.divmod(mesh.boundary_nodes, n + 1)
    # integer test for x1 ≤ 0: -1 + 2i/n ≤ 0 ⇔ 2i ≤ n
    hot = (i == 0) | ((j == 0) & (2 * i <= n))
    values = hot.astype(float)

    u_g = np.zeros(mesh.n_nodes)
    u_g[mesh.boundary_nodes] = values
    interior = np.setdiff1d(np.arange(mesh.n_nodes), mesh.boundary_nodes)
    return DirichletLifting(boundary_values=values, u_g=u_g, interior=interior)
