"""Residual-distribution solver for steady scalar conservation laws on
triangular meshes, with locally conservative flux recovery and entropy
dissipation audits."""

from .basis import DoFLayout, basis_eval
from .discretization import Discretization, ResidualSet, SchemeConfig, SchemeError
from .mesh import Mesh, generate_structured_mesh, read_mesh, scaled_inward_normals, write_mesh
from .problems import (
    BoundaryData,
    ConservationLaw,
    EntropyPair,
    Problem,
    builtin_problems,
    rusanov_interface_flux,
    upwind_boundary_flux,
)
from .quadrature import QuadratureRule, edge_quadrature, triangle_quadrature
from .solver import RunContext, SolveReport, compute_omega, convergence_study, solve_steady, truncation_study

__version__ = "0.1.0"
