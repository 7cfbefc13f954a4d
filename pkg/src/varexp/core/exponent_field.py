"""Variable exponents on a grid and everything derived from them.

An infinite exponent is carried by a per-node flag, never by a large float.
Nodes outside a field's ``support`` (for instance a field that only exists on
one part of the domain partition) hold NaN and are ignored by every
reduction.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DomainError
from .expressions import Expression
from .grid import Grid

logger = logging.getLogger(__name__)

DEFAULT_ETA = 0.05


@dataclass(frozen=True, eq=False)
class ExponentField:
    grid: Grid
    values: np.ndarray
    infinite: np.ndarray
    support: np.ndarray
    name: str = "p"
    lower: float | None = None
    upper: float | None = None
    expression: Expression | None = None

    def __post_init__(self):
        shape = self.grid.shape
        values = np.array(self.values, dtype=float).reshape(shape)
        infinite = np.array(self.infinite, dtype=bool).reshape(shape)
        support = np.array(self.support, dtype=bool).reshape(shape) | infinite

        finite = support & ~infinite
        if not np.all(np.isfinite(values[finite])):
            index = int(np.flatnonzero(finite & ~np.isfinite(values))[0])
            raise DomainError(f"exponent {self.name} is not finite at node {self.grid.node_coordinates(index)}; flag infinite nodes explicitly")
        values[~finite] = np.nan

        lower = float(np.min(values[finite])) if self.lower is None and finite.any() else self.lower
        if self.upper is not None:
            upper = self.upper
        elif infinite.any():
            upper = float("inf")
        else:
            upper = float(np.max(values[finite])) if finite.any() else None
        if lower is not None and upper is not None:
            if lower > upper:
                raise DomainError(f"exponent {self.name}: declared bounds [{lower}, {upper}] are empty")
            outside = finite & ((values < lower) | (values > upper))
            if outside.any():
                index = int(np.flatnonzero(outside)[0])
                raise DomainError(f"exponent {self.name} leaves its declared bounds [{lower}, {upper}] at node {self.grid.node_coordinates(index)}")
            if infinite.any() and upper != float("inf"):
                raise DomainError(f"exponent {self.name} has infinite nodes but a finite declared upper bound")

        for array in (values, infinite, support):
            array.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "infinite", infinite)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def constant(cls, grid: Grid, value: float, name: str = "p") -> "ExponentField":
        if value == float("inf"):
            return cls.from_values(grid, np.full(grid.shape, np.nan), name, infinite=np.ones(grid.shape, dtype=bool))
        return cls.from_values(grid, np.full(grid.shape, float(value)), name, expression=Expression.parse(float(value)))

    @classmethod
    def from_values(
        cls,
        grid: Grid,
        values,
        name: str = "p",
        infinite: np.ndarray | None = None,
        support: np.ndarray | None = None,
        lower: float | None = None,
        upper: float | None = None,
        expression: Expression | None = None,
    ) -> "ExponentField":
        values = np.broadcast_to(np.asarray(values, dtype=float), grid.shape)
        infinite = np.zeros(grid.shape, dtype=bool) if infinite is None else infinite
        support = np.ones(grid.shape, dtype=bool) if support is None else support
        return cls(grid, values, infinite, support, name, lower, upper, expression)

    @classmethod
    def from_expression(cls, grid: Grid, expression: Expression, name: str = "p", **fields: np.ndarray) -> "ExponentField":
        coords = dict(zip(("x", "y"), grid.coordinates))
        values = expression.evaluate(grid.shape, **coords, **fields)
        return cls.from_values(grid, values, name, expression=expression)

    @property
    def finite_mask(self) -> np.ndarray:
        return self.support & ~self.infinite

    @property
    def is_constant(self) -> bool:
        finite = self.values[self.finite_mask]
        return not self.infinite.any() and bool(self.support.all()) and finite.size > 0 and bool(np.all(finite == finite[0]))

    @property
    def minimum(self) -> float:
        finite = self.values[self.finite_mask]
        return float(np.min(finite)) if finite.size else float("inf")

    @property
    def maximum(self) -> float:
        if self.infinite.any():
            return float("inf")
        finite = self.values[self.finite_mask]
        return float(np.max(finite)) if finite.size else float("-inf")

    def restricted(self, mask: np.ndarray, name: str | None = None) -> "ExponentField":
        """The same field with support cut down to ``mask``."""
        return ExponentField.from_values(self.grid, self.values, name or self.name, infinite=self.infinite & mask, support=self.support & mask)

    def require_p_field(self) -> None:
        """Exponents of the leading operator: finite everywhere and at least 2."""
        if not self.support.all() or self.infinite.any():
            raise DomainError(f"exponent {self.name} must be finite at every node")
        if self.minimum < 2.0:
            index = int(np.argmin(self.values))
            raise DomainError(f"exponent {self.name} = {self.minimum} < 2 at node {self.grid.node_coordinates(index)}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lower": self.lower,
            "upper": "inf" if self.upper == float("inf") else self.upper,
            "constant": self.is_constant,
            "infinite_nodes": int(self.infinite.sum()),
            "defined_nodes": int(self.support.sum()),
        }


def nodal(value, grid: Grid) -> np.ndarray:
    """Nodal values of a field or of a constant."""
    if isinstance(value, ExponentField):
        grid.require_same(value.grid)
        return value.values
    return np.broadcast_to(np.asarray(value, dtype=float), grid.shape).copy()


def _first_node(grid: Grid, mask: np.ndarray) -> tuple[float, ...]:
    return grid.node_coordinates(int(np.flatnonzero(mask)[0]))


def conjugate(p: ExponentField) -> ExponentField:
    """p* = p/(p-1), with p = 1 mapped to infinity and p = infinity to 1."""
    finite = p.finite_mask
    below = finite & (np.nan_to_num(p.values, nan=1.0) < 1.0)
    if below.any():
        raise DomainError(f"exponent {p.name} < 1 at node {_first_node(p.grid, below)}; conjugate undefined")

    one = finite & (p.values == 1.0)
    regular = finite & ~one
    values = np.full(p.grid.shape, np.nan)
    values[regular] = p.values[regular] / (p.values[regular] - 1.0)
    values[p.infinite] = 1.0
    return ExponentField.from_values(p.grid, values, f"{p.name}*", infinite=one, support=p.support)


class CriticalExponents(NamedTuple):
    q0: float
    p_tilde: float


def critical_exponents(p0: float, n: int) -> CriticalExponents:
    """Conjugate q0 of p0 and the embedding threshold n*p0/(n-q0)."""
    if p0 < 2.0:
        raise DomainError(f"p0 = {p0} must be >= 2")
    q0 = p0 / (p0 - 1.0)
    if n <= q0:
        raise DomainError(f"critical exponent undefined for this analysis dimension (n = {n} <= q0 = {q0})")
    return CriticalExponents(q0, n * p0 / (n - q0))


class DerivedFields(NamedTuple):
    gamma: ExponentField
    theta: ExponentField
    q1: float
    p1_tilde: float
    p_tilde: ExponentField


def derived_fields(p: ExponentField, p1: float, xi: ExponentField) -> DerivedFields:
    """Fields of the reduction through v = |u|^gamma u."""
    grid = p.grid
    p.require_p_field()
    if p1 < 2.0:
        raise DomainError(f"p1 = {p1} must be >= 2")
    above = p.values < p1
    if above.any():
        raise DomainError(f"p1 = {p1} exceeds p at node {_first_node(grid, above)}")
    xi_values = nodal(xi, grid)
    if not np.all(xi_values > 1.0):
        raise DomainError(f"growth exponent must be > 1 at every node; fails at node {_first_node(grid, ~(xi_values > 1.0))}")

    q1, p1_tilde = critical_exponents(p1, grid.analysis_dimension)
    gamma = (p.values - p1) / (p1 - 1.0)
    theta = (xi_values + gamma) / (gamma + 1.0)
    p_tilde = p1_tilde * (gamma + 1.0) - gamma
    logger.debug("derived fields: gamma in [%g, %g], p1_tilde=%g", gamma.min(), gamma.max(), p1_tilde)
    return DerivedFields(
        gamma=ExponentField.from_values(grid, gamma, "gamma"),
        theta=ExponentField.from_values(grid, theta, "theta"),
        q1=q1,
        p1_tilde=p1_tilde,
        p_tilde=ExponentField.from_values(grid, p_tilde, "p_tilde"),
    )


@dataclass(frozen=True, eq=False)
class DomainPartition:
    """Disjoint node masks for the three growth regimes."""

    grid: Grid
    omega1: np.ndarray
    omega2: np.ndarray
    omega3: np.ndarray
    eta: float
    p_tilde: np.ndarray

    def __post_init__(self):
        masks = [np.asarray(m, dtype=bool).reshape(self.grid.shape) for m in (self.omega1, self.omega2, self.omega3)]
        overlap = (masks[0] & masks[1]) | (masks[0] & masks[2]) | (masks[1] & masks[2])
        if overlap.any():
            raise DomainError(f"partition masks overlap at node {_first_node(self.grid, overlap)}")
        uncovered = ~(masks[0] | masks[1] | masks[2])
        if uncovered[self.grid.interior].any():
            raise DomainError("partition masks do not cover every interior node")
        for name, mask in zip(("omega1", "omega2", "omega3"), masks):
            mask.setflags(write=False)
            object.__setattr__(self, name, mask)

    @property
    def regime(self) -> str:
        if not self.omega2.any() and not self.omega3.any():
            return "omega1_only"
        if not self.omega3.any():
            return "omega1_omega2"
        return "with_omega3"

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "regime": self.regime,
            "omega1_nodes": int(self.omega1.sum()),
            "omega2_nodes": int(self.omega2.sum()),
            "omega3_nodes": int(self.omega3.sum()),
        }


def partition(alpha: ExponentField, p_ref, eta: float, p_tilde) -> DomainPartition:
    """Classify nodes by alpha against [1, p_ref - eta), [p_ref - eta, p_tilde), [p_tilde, inf)."""
    if not 0.0 < eta < 1.0:
        raise ConfigError(f"eta = {eta} must lie in (0, 1)")
    grid = alpha.grid
    if not alpha.support.all() or alpha.infinite.any():
        raise DomainError(f"growth exponent {alpha.name} must be finite at every node")
    ref = nodal(p_ref, grid)
    tilde = nodal(p_tilde, grid)
    if not np.all(tilde > ref):
        raise DomainError(f"critical exponent does not exceed the reference exponent at node {_first_node(grid, ~(tilde > ref))}")
    if alpha.minimum < 1.0:
        raise DomainError(f"growth exponent {alpha.name} < 1 at node {_first_node(grid, alpha.values < 1.0)}")

    omega1 = alpha.values < ref - eta
    omega3 = alpha.values >= tilde
    omega2 = ~omega1 & ~omega3
    result = DomainPartition(grid, omega1, omega2, omega3, eta, tilde)
    logger.debug("partition of %s: %s", alpha.name, result.to_dict())
    return result


class BetaFields(NamedTuple):
    beta: ExponentField
    beta1: ExponentField


def beta_fields(part: DomainPartition, alpha: ExponentField, p0: float, p_tilde: float) -> BetaFields:
    """Integrability exponents for the coefficients c0 and c1.

    beta1 is alpha* on omega1 and q0 elsewhere. beta is p0*alpha*/(p0-alpha)
    on omega1, p_tilde*alpha*/(p_tilde-alpha) on omega2 and infinite on omega3.
    """
    grid = alpha.grid
    a = alpha.values
    a_star = conjugate(alpha)
    q0 = p0 / (p0 - 1.0)

    if np.any(part.omega1 & (a >= p0)):
        raise DomainError(f"{alpha.name} reaches {p0} on omega1")
    if np.any(part.omega2 & (a >= p_tilde)):
        raise DomainError(f"{alpha.name} reaches the critical exponent {p_tilde} on omega2")

    beta1 = np.full(grid.shape, q0)
    beta1[part.omega1] = a_star.values[part.omega1]
    beta1_inf = part.omega1 & a_star.infinite

    beta = np.full(grid.shape, np.nan)
    for mask, top in ((part.omega1, p0), (part.omega2, p_tilde)):
        regular = mask & ~a_star.infinite
        beta[regular] = top * a_star.values[regular] / (top - a[regular])
    beta_inf = part.omega3 | ((part.omega1 | part.omega2) & a_star.infinite)
    covered = part.omega1 | part.omega2 | part.omega3

    return BetaFields(
        beta=ExponentField.from_values(grid, beta, "beta", infinite=beta_inf, support=covered),
        beta1=ExponentField.from_values(grid, beta1, "beta1", infinite=beta1_inf, support=covered),
    )


class MuFields(NamedTuple):
    mu1: ExponentField
    mu2: ExponentField
    mu3: ExponentField
    mu4: ExponentField
    mu: ExponentField


def mu_fields(part: DomainPartition, theta: ExponentField, gamma: ExponentField, xi: ExponentField, xi1: ExponentField | None, p1: float) -> MuFields:
    """Integrability exponents for the coefficients a0 ... a5 of the main problem.

    mu1 and mu2 live on omega2, mu3 on omega3. mu4 and mu are the beta1/beta
    of the reduced problem, i.e. the same rule applied to theta with p1.
    """
    grid = theta.grid
    g = gamma.values
    x = nodal(xi, grid)
    p = p1 * (g + 1.0) - g
    _, p1_tilde = critical_exponents(p1, grid.analysis_dimension)

    mu1 = np.full(grid.shape, np.nan)
    mu2 = np.full(grid.shape, np.nan)
    if part.omega2.any():
        if xi1 is None:
            raise DomainError("omega2 is not empty but no sign exponent xi1 is declared")
        x1 = xi1.values
        o2 = part.omega2
        if np.any(o2 & ~xi1.finite_mask):
            raise DomainError("sign exponent xi1 is undefined on part of omega2")
        if np.any(o2 & (p - x1 <= 0.0)):
            raise DomainError(f"xi1 reaches p on omega2 at node {_first_node(grid, o2 & (p - x1 <= 0.0))}")
        if np.any(o2 & (x1 <= 0.0)):
            raise DomainError("xi1 must be positive on omega2")
        mu1[o2] = (p[o2] + g[o2]) / (p[o2] - x1[o2])
        mu2[o2] = (x1[o2] + g[o2]) / x1[o2]

    mu3 = np.full(grid.shape, np.nan)
    o3 = part.omega3
    mu3[o3] = (x[o3] + g[o3]) / x[o3]

    reduced = beta_fields(part, theta, p1, p1_tilde)
    return MuFields(
        mu1=ExponentField.from_values(grid, mu1, "mu1", support=part.omega2),
        mu2=ExponentField.from_values(grid, mu2, "mu2", support=part.omega2),
        mu3=ExponentField.from_values(grid, mu3, "mu3", support=o3),
        mu4=ExponentField.from_values(grid, reduced.beta1.values, "mu4", infinite=reduced.beta1.infinite, support=reduced.beta1.support),
        mu=ExponentField.from_values(grid, reduced.beta.values, "mu", infinite=reduced.beta.infinite, support=reduced.beta.support),
    )
