"""Modulars, Luxemburg and Sobolev norms, and the inclusion/embedding predicates."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .exponent_field import ExponentField, nodal
from .grid import GridFunction, QuadratureKind, QuadratureRule, gradient

logger = logging.getLogger(__name__)

LUXEMBURG_TOLERANCE = 1e-10
MAX_BISECTIONS = 200
MAX_BRACKET_STEPS = 2000


def modular(u: GridFunction, p: ExponentField, mask: np.ndarray | None = None, kind: QuadratureKind | str = QuadratureKind.TRAPEZOID) -> float:
    """sigma_p(u): quadrature of |u|^p over finite nodes plus max |u| over infinite ones."""
    u.grid.require_same(p.grid, "function and exponent")
    rule = QuadratureRule.for_grid(u.grid, kind)
    region = p.support if mask is None else (p.support & mask)
    finite = region & ~p.infinite
    if np.any(np.nan_to_num(p.values[finite], nan=1.0) < 1.0):
        raise DomainError(f"exponent {p.name} < 1 inside the modular")

    a = np.abs(u.values)
    total = float(np.sum(rule.weights[finite] * a[finite] ** p.values[finite]))
    flagged = region & p.infinite
    if flagged.any():
        total += float(np.max(a[flagged]))
    return total


def luxemburg_norm(u: GridFunction, p: ExponentField, mask: np.ndarray | None = None, kind: QuadratureKind | str = QuadratureKind.TRAPEZOID, tolerance: float = LUXEMBURG_TOLERANCE) -> float:
    """inf{lambda > 0 : sigma_p(u/lambda) <= 1}.

    Brackets by doubling/halving from max|u|, then bisects until
    |sigma_p(u/lambda) - 1| <= tolerance.
    """
    region = p.support if mask is None else (p.support & mask)
    if np.any(region & p.infinite):
        raise DomainError(f"exponent {p.name} has infinite nodes; norms are only defined for bounded exponents")
    scale = u.max_abs(region)
    if scale == 0.0:
        return 0.0

    def excess(lam: float) -> float:
        return modular(u.with_values(u.values / lam), p, region, kind) - 1.0

    lo = hi = last = scale
    value = excess(scale)
    steps = 0
    if value > 0.0:
        while value > 0.0:
            lo, hi = hi, hi * 2.0
            last = hi
            value = excess(hi)
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise NumericalError("Luxemburg bracketing did not terminate", {"lo": lo, "hi": hi})
    else:
        while value < 0.0:
            lo, hi = lo / 2.0, lo
            last = lo
            value = excess(lo)
            steps += 1
            if steps > MAX_BRACKET_STEPS:
                raise NumericalError("Luxemburg bracketing did not terminate", {"lo": lo, "hi": hi})
    if abs(value) <= tolerance:
        return last

    logger.debug("luxemburg bracket [%r, %r] after %d steps", lo, hi, steps)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        value = excess(mid)
        if abs(value) <= tolerance:
            return mid
        if mid in (lo, hi):
            if abs(value) <= LUXEMBURG_TOLERANCE:
                return mid
            break
        if value > 0.0:
            lo = mid
        else:
            hi = mid
    raise NumericalError(
        f"Luxemburg norm did not converge after {MAX_BISECTIONS} bisections",
        {"lo": lo, "hi": hi, "residual": value},
    )


def sobolev_norm(u: GridFunction, p: ExponentField) -> float:
    """First-order norm ||u|| + sum_i ||D_i u|| in L^{p(x)}."""
    total = luxemburg_norm(u, p)
    for d in gradient(u):
        total += luxemburg_norm(GridFunction(u.grid, d), p)
    return total


@dataclass(frozen=True)
class InclusionResult:
    holds: bool
    witness: tuple[float, ...] | None = None


def inclusion_check(p1: ExponentField, p2: ExponentField) -> InclusionResult:
    """L^{p1} is contained in L^{p2} exactly when p2 <= p1 at every node."""
    p1.grid.require_same(p2.grid, "exponents")
    both = p1.support & p2.support
    a = np.where(p1.infinite, np.inf, p1.values)
    b = np.where(p2.infinite, np.inf, p2.values)
    bad = both & ~(b <= a)
    if bad.any():
        return InclusionResult(False, p1.grid.node_coordinates(int(np.flatnonzero(bad)[0])))
    return InclusionResult(True)


@dataclass(frozen=True, eq=False)
class EmbeddingResult:
    holds: bool
    margin: np.ndarray
    failing: np.ndarray

    def to_dict(self, grid) -> dict:
        failing = [grid.node_coordinates(i) for i in np.flatnonzero(self.failing)]
        finite = self.margin[np.isfinite(self.margin)]
        return {
            "holds": self.holds,
            "min_margin": float(finite.min()) if finite.size else None,
            "failing_nodes": failing,
        }


def embedding_check(m: int, p: ExponentField, q, n: int) -> EmbeddingResult:
    """W^{m,p} embeds compactly into L^q when m*p < n and q < n*p/(n - m*p) nodally.

    The margin is n*p/(n - m*p) - q, NaN where m*p >= n.
    """
    if m < 1 or n < 2:
        raise DomainError(f"embedding needs m >= 1 and n >= 2, got m={m}, n={n}")
    grid = p.grid
    pv = p.values
    qv = nodal(q, grid)
    below = m * pv < n
    margin = np.full(grid.shape, np.nan)
    margin[below] = n * pv[below] / (n - m * pv[below]) - qv[below]
    failing = ~(below & (margin > 0.0))
    return EmbeddingResult(bool(not failing.any()), margin, failing)
