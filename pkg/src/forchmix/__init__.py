"""Expanded mixed finite elements for nonlinear porous-media flow.

The package solves the slightly compressible flow equation with a
polynomial momentum drag law on the unit square: lowest-order
Raviart-Thomas fluxes, piecewise-constant pressures and pressure
gradients, implicit time stepping, and a frozen-mobility fixed-point
solve per step.  A convergence-study harness with a manufactured
solution drives the command line.
"""

from forchmix.law import ForchheimerLaw, RootfindError
from forchmix.mesh import StructuredTriMesh, quadrature
from forchmix.solver import (DiscreteState, PicardDivergenceError,
                             ProblemData, SolverConfig, initialize, run)
from forchmix.spaces import DofLayout, assemble
from forchmix.study import StudyConfig, StudyError, run_study
from forchmix.verification import (ManufacturedSolution, convergence_rates,
                                   error_p_L2, error_p_Linf, error_vec_Lbeta)

__version__ = "0.1.0"

__all__ = [
    "ForchheimerLaw", "RootfindError",
    "StructuredTriMesh", "quadrature",
    "DofLayout", "assemble",
    "ProblemData", "SolverConfig", "DiscreteState",
    "PicardDivergenceError", "initialize", "run",
    "ManufacturedSolution", "error_p_L2", "error_p_Linf",
    "error_vec_Lbeta", "convergence_rates",
    "StudyConfig", "StudyError", "run_study",
    "__version__",
]
