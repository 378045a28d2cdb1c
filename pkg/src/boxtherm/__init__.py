"""Box-scheme (finite volume element) solver for the nonlocal thermistor problem

    u_t - div(k(u) grad u) = lam f(u) / (integral of f(u))**2

on non-obtuse triangulations with homogeneous Dirichlet data.
"""
from .assembly import (assemble_consistent_mass, assemble_flux_matrix, assemble_lumped_mass,
                       assemble_nonlocal_source, p1_stiffness)
from .coefficients import CoefficientModel, HypothesisViolation, parse_preset
from .dual import DualMesh, build_dual
from .mesh import (Mesh, MeshError, generate_structured_mesh, load_mesh, parse_mesh,
                   refine_uniform, save_mesh, serialize_mesh, structured_level, validate_mesh)
from .operators import compute_norms, flux_projection, l2_project
from .solver import Problem, SolverConfig, SolverError, solve_transient, steady_state
from .verification import (ErrorReport, compute_error_norms, invariant_suite,
                           richardson_study, run_convergence_study)

__version__ = "0.1.0"

__all__ = [
    "CoefficientModel", "DualMesh", "ErrorReport", "HypothesisViolation", "Mesh",
    "MeshError", "Problem", "SolverConfig", "SolverError", "assemble_consistent_mass",
    "assemble_flux_matrix", "assemble_lumped_mass", "assemble_nonlocal_source",
    "build_dual", "compute_error_norms", "compute_norms", "flux_projection",
    "generate_structured_mesh", "invariant_suite", "l2_project", "load_mesh",
    "p1_stiffness", "parse_mesh", "parse_preset", "refine_uniform", "richardson_study",
    "run_convergence_study", "save_mesh", "serialize_mesh", "solve_transient",
    "steady_state", "structured_level", "validate_mesh",
]
