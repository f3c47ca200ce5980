"""Q1 finite elements for the stabilized convection-diffusion benchmark."""

from .affine import (
    AffineSystem,
    CoefficientFn,
    ParameterError,
    Snapshot,
    assemble_at,
    build_benchmark,
    full_solve,
)
from .assembly import (
    assemble_convection,
    assemble_diffusion_blocks,
    assemble_load,
    assemble_operator,
    assemble_sd_blocks,
)
from .mesh import DirichletLifting, MeshError, StructuredMesh, build_lifting, build_mesh
from .solver import SolverError, dump_matrix_market, solve_sparse

__all__ = [
    "AffineSystem",
    "CoefficientFn",
    "DirichletLifting",
    "MeshError",
    "ParameterError",
    "Snapshot",
    "SolverError",
    "StructuredMesh",
    "assemble_at",
    "assemble_convection",
    "assemble_diffusion_blocks",
    "assemble_load",
    "assemble_operator",
    "assemble_sd_blocks",
    "build_benchmark",
    "build_lifting",
    "build_mesh",
    "dump_matrix_market",
    "full_solve",
    "solve_sparse",
]
