"""Local projection stabilized conforming finite elements for vector advection
in H(curl) and H(div) on simplicial meshes."""

from .analysis import (ConvergenceReport, ErrorBreakdown, eoc, error_breakdown,
                       run_convergence_study, solve_level)
from .assembly import LpsConfig, SparseSystem, assemble
from .errors import (ConfigurationError, DegenerateCellError, FactorizationFailure,
                     IllConditionedBasisError, InvalidArgumentError, LpsError, ResidualFailure,
                     UnsupportedDegreeError, UnsupportedElementError, WellposednessWarning)
from .mesh import SimplicialMesh, build_structured_mesh
from .problems import AdvectionProblem, get_example, list_examples
from .quadrature import simplex_rule
from .solver import SolveReport, solve
from .spaces import FiniteElementSpace
from .verification import (build_modified_interpolant, check_wellposedness, estimate_infsup,
                           run_structural_checks)

__version__ = "0.1.0"

__all__ = [
    "AdvectionProblem", "ConfigurationError", "ConvergenceReport", "DegenerateCellError",
    "ErrorBreakdown", "FactorizationFailure", "FiniteElementSpace", "IllConditionedBasisError",
    "InvalidArgumentError", "LpsConfig", "LpsError", "ResidualFailure", "SimplicialMesh",
    "SolveReport", "SparseSystem", "UnsupportedDegreeError", "UnsupportedElementError",
    "WellposednessWarning", "assemble", "build_modified_interpolant", "build_structured_mesh",
    "check_wellposedness", "eoc", "error_breakdown", "estimate_infsup", "get_example",
    "list_examples", "run_convergence_study", "run_structural_checks", "simplex_rule", "solve",
    "solve_level",
]
