"""Numerical core: grids, exponent fields, norms, the reduction, checks and the solver."""

from .errors import ConfigError, DomainError, GridMismatchError, NumericalError, VarexpError
from .estimates import HypothesisReport, check_hypotheses
from .exponent_field import DomainPartition, ExponentField, partition
from .grid import Grid, GridFunction, QuadratureKind, QuadratureRule
from .problem import ProblemConfig, ProblemKind, ProblemSpec, load_config, load_problem, write_problem
from .solver import SolveReport, SolverConfig, refinement_study, solve, solve_main, solve_reduced
from .transform import reduce_problem

__all__ = [
    "ConfigError",
    "DomainError",
    "DomainPartition",
    "ExponentField",
    "Grid",
    "GridFunction",
    "GridMismatchError",
    "HypothesisReport",
    "NumericalError",
    "ProblemConfig",
    "ProblemKind",
    "ProblemSpec",
    "QuadratureKind",
    "QuadratureRule",
    "SolveReport",
    "SolverConfig",
    "VarexpError",
    "check_hypotheses",
    "load_config",
    "load_problem",
    "partition",
    "reduce_problem",
    "refinement_study",
    "solve",
    "solve_main",
    "solve_reduced",
    "write_problem",
]
