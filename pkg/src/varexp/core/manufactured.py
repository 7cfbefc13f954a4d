"""Sources built from a chosen exact solution."""

import logging

import numpy as np
import sympy

from .errors import ConfigError
from .expressions import COORDINATES, Expression, symbol
from .grid import GridFunction
from .stencil import discrete_operator

logger = logging.getLogger(__name__)


def _analytic_laplacian(solution: Expression, exponent: Expression, spec) -> np.ndarray:
    """Laplacian of |u*|^{P-2} u* by symbolic differentiation, sampled on the grid."""
    grid = spec.grid
    w = sympy.Abs(solution.expr) ** (exponent.expr - 2) * solution.expr
    lap = sum(sympy.diff(w, symbol(axis), 2) for axis in COORDINATES[: grid.dimension])
    # derivatives of |.| produce point masses at the zeros of u*; the nodal source drops them
    lap = lap.replace(lambda e: isinstance(e, sympy.DiracDelta), lambda e: sympy.Integer(0))
    coords = dict(zip(COORDINATES, grid.coordinates))
    return Expression.from_sympy(lap).evaluate(grid.shape, **coords)


def manufactured_source(spec, mode: str = "analytic") -> GridFunction:
    """h such that ``spec.manufactured`` solves the problem.

    ``discrete`` applies the discrete operator the solver uses, so the exact
    solution is also the exact discrete solution. ``analytic`` differentiates
    symbolically and converges to it at the rate of the stencil.
    """
    grid = spec.grid
    u = spec.manufactured
    if mode == "discrete":
        if spec.is_main:
            # deferred import: the reduction itself needs the problem module
            from .transform import phi1, reduce_problem

            reduced = reduce_problem(spec)
            values = discrete_operator(phi1(u, reduced.gamma), reduced)
        else:
            values = discrete_operator(u, spec)
    elif mode == "analytic":
        config = spec.config
        solution = None if config is None or config.manufactured is None else config.manufactured.expression
        exponent = spec.p.expression
        if solution is None or exponent is None:
            raise ConfigError("analytic manufactured sources need closed-form expressions for the solution and the exponent")
        factor = spec.leading_factor if spec.is_main else spec.leading_factor / (spec.p0 - 1.0)
        lap = _analytic_laplacian(solution, exponent, spec)
        values = -factor * lap + spec.nonlinearity(u.values)
    else:
        raise ConfigError(f"unknown manufactured mode {mode!r}")

    values = np.where(np.isfinite(values), values, 0.0)
    values[grid.boundary_mask] = 0.0
    logger.debug("manufactured source (%s) for %s: max |h| = %g", mode, spec.name, float(np.max(np.abs(values))))
    return GridFunction(grid, values)
