"""Graded triangulations and Steklov eigenvalue solvers (n = 2)."""

from .mesh import TriMesh, generate_cusp_mesh, load_mesh, save_mesh
from .fem import (
    FemFunction,
    FemWorkspace,
    assemble_functionals,
    rayleigh_quotient,
    weak_residual,
)
from .solve import (
    SolverOptions,
    SteklovSolution,
    TraceConstantBound,
    linear_oracle,
    minimize_rayleigh,
    trace_constant,
)

__all__ = [
    "TriMesh",
    "generate_cusp_mesh",
    "load_mesh",
    "save_mesh",
    "FemFunction",
    "FemWorkspace",
    "assemble_functionals",
    "rayleigh_quotient",
    "weak_residual",
    "SolverOptions",
    "SteklovSolution",
    "TraceConstantBound",
    "linear_oracle",
    "minimize_rayleigh",
    "trace_constant",
]
