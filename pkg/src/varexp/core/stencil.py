"""Discrete operator shared by the solver and the weak-residual checks.

The leading term is written in the variable w = |u|^{rho-2} u, where it is a
plain five-point (three-point in 1D) Laplacian. Fluxes live on grid edges as
differences of w, which is the conservative form of |u|^{rho-2} D_i u.
"""

import functools

import numpy as np
from scipy import sparse

from .grid import Grid, GridFunction, QuadratureRule, signed_power


@functools.lru_cache(maxsize=32)
def laplacian(grid: Grid) -> sparse.csc_matrix:
    """Discrete Laplacian on interior nodes with homogeneous Dirichlet data."""
    factors = []
    for n, h in zip(grid.nodes, grid.spacing):
        m = n - 2
        factors.append(sparse.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(m, m)) / h**2)
    if grid.dimension == 1:
        return sparse.csc_matrix(factors[0])
    ix = sparse.identity(grid.nodes[0] - 2)
    iy = sparse.identity(grid.nodes[1] - 2)
    return sparse.csc_matrix(sparse.kron(factors[0], iy) + sparse.kron(ix, factors[1]))


def interior(grid: Grid, values: np.ndarray) -> np.ndarray:
    return np.asarray(values)[grid.interior].ravel()


def embed(grid: Grid, vector: np.ndarray) -> np.ndarray:
    """Nodal array with ``vector`` on the interior and zeros on the boundary."""
    full = np.zeros(grid.shape)
    full[grid.interior] = np.asarray(vector).reshape(grid.interior_shape)
    return full


def operator_variable(u: np.ndarray, spec) -> tuple[np.ndarray, float]:
    """The flux variable w and the factor in front of -Laplacian(w)."""
    if spec.is_main:
        return signed_power(u, spec.p.values - 2.0), spec.leading_factor
    p0 = spec.p0
    return signed_power(u, p0 - 2.0), spec.leading_factor / (p0 - 1.0)


def discrete_operator(u: GridFunction, spec) -> np.ndarray:
    """factor * (-Laplacian w) + c(x, u) on interior nodes, zero on the boundary."""
    grid = spec.grid
    w, factor = operator_variable(u.values, spec)
    flux = -factor * (laplacian(grid) @ interior(grid, w))
    values = embed(grid, flux)
    values[grid.interior] += spec.nonlinearity(u.values)[grid.interior]
    return values


def hat_residuals(u: GridFunction, spec) -> np.ndarray:
    """Weak residual against every interior nodal hat function, in grid layout."""
    grid = spec.grid
    weights = QuadratureRule.for_grid(grid).weights
    residual = weights * (discrete_operator(u, spec) - spec.source.values)
    residual[grid.boundary_mask] = 0.0
    return residual


def _edge_weights(grid: Grid, axis: int) -> np.ndarray:
    """Quadrature weight of each edge along ``axis``: edge length times transverse trapezoid weight."""
    h = grid.spacing[axis]
    if grid.dimension == 1:
        return np.full(grid.nodes[0] - 1, h)
    other = 1 - axis
    transverse = np.full(grid.nodes[other], grid.spacing[other])
    transverse[0] = transverse[-1] = grid.spacing[other] / 2.0
    length = np.full(grid.nodes[axis] - 1, h)
    return np.multiply.outer(length, transverse) if axis == 0 else np.multiply.outer(transverse, length)


def pairing_residual(u: GridFunction, spec, test: GridFunction) -> float:
    """Weak residual of ``u`` against an arbitrary test function vanishing on the boundary."""
    grid = spec.grid
    w, factor = operator_variable(u.values, spec)
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        dw = np.diff(w, axis=axis) / h
        dt = np.diff(test.values, axis=axis) / h
        total += factor * float(np.sum(_edge_weights(grid, axis) * dw * dt))
    rule = QuadratureRule.for_grid(grid)
    pointwise = (spec.nonlinearity(u.values) - spec.source.values) * test.values
    total += rule.integrate(np.where(grid.boundary_mask, 0.0, pointwise))
    return total
