"""Power homeomorphisms and the reduction of the variable-exponent problem to a constant one.

With gamma = (p - p1)/(p1 - 1) the substitution v = |u|^gamma u turns
-Laplacian(|u|^{p(x)-2} u) into (p1 - 1) times the p1-Laplacian of v, since
(gamma + 1)(p1 - 1) = p - 1. The growth and sign data of the nonlinearity
are carried along, with Young's inequality absorbing the cross terms.
"""

import dataclasses
import logging
import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .exponent_field import DerivedFields, DomainPartition, ExponentField, derived_fields, partition
from .expressions import Expression
from .grid import GridFunction, QuadratureRule, gradient, signed_power
from .modular_spaces import luxemburg_norm
from .problem import ProblemKind, ProblemSpec

logger = logging.getLogger(__name__)


def phi0(u: GridFunction, p: ExponentField) -> GridFunction:
    """u -> |u|^{p-2} u."""
    u.grid.require_same(p.grid)
    return u.with_values(signed_power(u.values, p.values - 2.0))


def phi0_inverse(v: GridFunction, p: ExponentField) -> GridFunction:
    """v -> |v|^{-(p-2)/(p-1)} v."""
    v.grid.require_same(p.grid)
    return v.with_values(signed_power(v.values, -(p.values - 2.0) / (p.values - 1.0)))


def _require_gamma(gamma: ExponentField) -> None:
    if np.any(np.nan_to_num(gamma.values, nan=0.0) < 0.0):
        raise DomainError(f"{gamma.name} must be >= 0 at every node")


def phi1(u: GridFunction, gamma: ExponentField) -> GridFunction:
    """u -> |u|^gamma u."""
    _require_gamma(gamma)
    return u.with_values(signed_power(u.values, gamma.values))


def phi1_inverse(v: GridFunction, gamma: ExponentField) -> GridFunction:
    """v -> |v|^{-gamma/(gamma+1)} v."""
    _require_gamma(gamma)
    return v.with_values(signed_power(v.values, -gamma.values / (gamma.values + 1.0)))


class DerivativeTerms(NamedTuple):
    analytic: tuple[GridFunction, ...]
    log_term: tuple[GridFunction, ...]


def _exponent_gradient(rho: ExponentField) -> tuple[np.ndarray, ...]:
    grid = rho.grid
    if rho.expression is not None:
        coords = dict(zip(("x", "y"), grid.coordinates))
        return tuple(rho.expression.diff(axis).evaluate(grid.shape, **coords) for axis in ("x", "y")[: grid.dimension])
    return gradient(GridFunction(grid, rho.values))


def transform_derivative_terms(u: GridFunction, rho: ExponentField) -> DerivativeTerms:
    """The two summands of D_i(|u|^{rho-2} u).

    ``analytic`` is (rho - 1)|u|^{rho-2} D_i u and ``log_term`` is
    (D_i rho)|u|^{rho-2} u ln|u|, taken as 0 where u = 0.
    """
    u.grid.require_same(rho.grid)
    rho.require_p_field()
    a = np.abs(u.values)
    weight = a ** (rho.values - 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_factor = np.where(a > 0.0, signed_power(u.values, rho.values - 2.0) * np.log(np.where(a > 0.0, a, 1.0)), 0.0)
    analytic = tuple(GridFunction(u.grid, (rho.values - 1.0) * weight * d) for d in gradient(u))
    log_term = tuple(GridFunction(u.grid, d * log_factor) for d in _exponent_gradient(rho))
    return DerivativeTerms(analytic, log_term)


class LogConstants(NamedTuple):
    m1: float
    m2: float


def log_inequality_constants(zeta: ExponentField, beta: float, eps: float, mes: float) -> LogConstants:
    """Constants of the integral of |u|^zeta |ln|u||^beta <= M1 integral of |u|^{zeta+eps} + M2.

    M1 = (beta/(e eps))^beta bounds the part where |u| >= 1 through
    ln t <= t^delta/(e delta), delta = eps/beta. M2 is mes times the supremum of
    t^{zeta-} |ln t|^beta over (0, 1), which is (beta/(e zeta-))^beta.
    """
    if eps <= 0.0:
        raise DomainError(f"eps = {eps} must be > 0")
    if beta <= 1.0:
        raise DomainError(f"beta = {beta} must be > 1")
    lower = zeta.minimum
    if lower < 1.0:
        raise DomainError(f"{zeta.name}- = {lower} must be >= 1")
    m1 = (beta / (math.e * eps)) ** beta
    m2 = (beta / (math.e * lower)) ** beta * mes
    return LogConstants(m1, m2)


class LogMomentSides(NamedTuple):
    lhs: float
    rhs: float
    m1: float
    m2: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "m1": self.m1, "m2": self.m2, "holds": self.holds}


def log_moment_sides(u: GridFunction, zeta: ExponentField, beta: float, eps: float) -> LogMomentSides:
    """Both sides of the log-moment inequality, by trapezoid quadrature."""
    u.grid.require_same(zeta.grid)
    rule = QuadratureRule.for_grid(u.grid)
    m1, m2 = log_inequality_constants(zeta, beta, eps, u.grid.measure)
    a = np.abs(u.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        moment = np.where(a > 0.0, a**zeta.values * np.abs(np.log(np.where(a > 0.0, a, 1.0))) ** beta, 0.0)
    lhs = rule.integrate(moment)
    rhs = m1 * rule.integrate(a ** (zeta.values + eps)) + m2
    return LogMomentSides(lhs, rhs, m1, m2)


def t0_exponents(rho: ExponentField, m: float, varphi: ExponentField) -> tuple[ExponentField, ExponentField]:
    """The exponents phi + psi and (phi + psi)/((m-1)(psi+1)), with psi = (rho - m)/(m - 1)."""
    if m < 2.0 or np.any(rho.values < m):
        raise DomainError(f"need rho >= m >= 2, got m = {m} and rho- = {rho.minimum}")
    psi = (rho.values - m) / (m - 1.0)
    total = varphi.values + psi
    return (
        ExponentField.from_values(rho.grid, total, "phi+psi"),
        ExponentField.from_values(rho.grid, total / ((m - 1.0) * (psi + 1.0)), "t0_image"),
    )


def t0_metric(u: GridFunction, v: GridFunction, rho: ExponentField, m: float, varphi: ExponentField) -> float:
    """Distance between u and v through phi0: a Lebesgue norm of the image difference plus its W_0^{1,m1} norm."""
    u.grid.require_same(v.grid)
    _, image = t0_exponents(rho, m, varphi)
    diff = phi0(u, rho) - phi0(v, rho)
    m1 = ExponentField.constant(u.grid, m / (m - 1.0), "m1")
    total = luxemburg_norm(diff, image)
    for d in gradient(diff):
        total += luxemburg_norm(GridFunction(u.grid, d), m1)
    return total


def young_constant(eps, r):
    """C(eps) of ab <= eps a^r + C(eps) b^{r'}; r = inf gives 1."""
    eps = np.asarray(eps, dtype=float)
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_conj = r / (r - 1.0)
        value = (eps * r) ** (-r_conj / r) / r_conj
    return np.where(np.isinf(r), 1.0, value)


def main_partition(spec: ProblemSpec) -> tuple[DerivedFields, DomainPartition]:
    """Derived fields and the partition of xi against [p - eta, p_tilde(x))."""
    if not spec.is_main:
        raise DomainError(f"{spec.name} is not a {ProblemKind.MAIN.value} problem")
    derived = derived_fields(spec.p, spec.reduction_exponent, spec.growth)
    part = partition(spec.growth, spec.p, spec.eta, derived.p_tilde)
    return derived, part


class Threshold(NamedTuple):
    eta_tilde: float
    threshold: float
    consistent: bool
    gap: float

    def to_dict(self) -> dict:
        return {"eta_tilde": self.eta_tilde, "threshold": self.threshold, "consistent": self.consistent, "gap": self.gap}


def transformed_threshold(theta: ExponentField, gamma: ExponentField, part: DomainPartition, p1: float, eta: float) -> Threshold:
    """The constant threshold p1 - eta_tilde that splits theta like the original partition splits xi.

    xi < p - eta is theta < p1 - eta/(gamma + 1), so p1 - eta/(1 + gamma+) is the
    uniform choice; it is lowered to min theta over omega2 and omega3 if needed.
    ``consistent`` says whether every omega1 node stays below it.
    """
    eta_tilde = eta / (1.0 + gamma.maximum)
    threshold = p1 - eta_tilde
    upper = part.omega2 | part.omega3
    if upper.any() and float(np.min(theta.values[upper])) < threshold:
        threshold = float(np.min(theta.values[upper]))
        eta_tilde = p1 - threshold
    below = float(np.max(theta.values[part.omega1])) if part.omega1.any() else -math.inf
    gap = threshold - below
    return Threshold(eta_tilde, threshold, bool(gap > 0.0), gap)


_INNER = Expression.parse("sign(tau)*abs(tau)^(1/(gamma+1))", names=("gamma",))


def reduce_problem(spec: ProblemSpec) -> ProblemSpec:
    """Rewrite a main problem as the constant-exponent problem in v = |u|^gamma u.

    The result has exponent p1, leading factor (p1 - 1), nonlinearity
    b(x, v) = a(x, |v|^{-gamma/(gamma+1)} v), growth exponent theta and sign
    exponent (xi1 + gamma)/(gamma + 1). Where gamma > 0 the sign data pick up
    the Young terms: c2 = a2 + 1 and c3 = a3^{mu2} on omega2, c4 = a4 - eps and
    c5 = C(eps) a5^{mu3} on omega3.
    """
    derived, part = main_partition(spec)
    grid = spec.grid
    p1 = spec.reduction_exponent
    g = derived.gamma.values
    positive = g > 0.0
    a = {k: spec.coefficient(k).values for k in range(6)}
    c = {k: a[k].copy() for k in range(6)}

    # nodes without xi1 keep a2, a3; check_hypotheses reports them
    o2 = part.omega2 & positive
    if spec.sign is not None:
        o2 &= spec.sign.finite_mask
    else:
        o2 = np.zeros_like(o2)
    if o2.any():
        x1 = spec.sign.values[o2]
        c[2][o2] = a[2][o2] + 1.0
        c[3][o2] = a[3][o2] ** ((x1 + g[o2]) / x1)

    o3 = part.omega3 & positive
    floor = spec.floor
    eps = spec.young_epsilon if spec.young_epsilon is not None else spec.floor / 2.0
    if o3.any():
        if not 0.0 < eps < spec.floor:
            raise DomainError(f"Young epsilon {eps} must lie in (0, floor = {spec.floor}) when omega3 carries gamma > 0")
        xi = spec.growth.values[o3]
        mu3 = (xi + g[o3]) / xi
        c[4][o3] = a[4][o3] - eps
        c[5][o3] = young_constant(eps, (xi + g[o3]) / g[o3]) * a[5][o3] ** mu3
        floor = spec.floor - eps

    threshold = transformed_threshold(derived.theta, derived.gamma, part, p1, spec.eta)
    if not threshold.consistent:
        logger.warning("%s: omega1 is not separated by a constant threshold after reduction (gap %g)", spec.name, threshold.gap)

    sign = None
    if spec.sign is not None:
        x1 = spec.sign.values
        sign = ExponentField.from_values(grid, (x1 + g) / (g + 1.0), "alpha1", support=spec.sign.support)

    nonlinearity = spec.nonlinearity.substitute_argument(_INNER, gamma=g)
    manufactured = None if spec.manufactured is None else phi1(spec.manufactured, derived.gamma)
    provenance = {
        **spec.provenance,
        "reduced_from": spec.name,
        "p1": p1,
        "threshold": threshold.to_dict(),
        "young_epsilon": eps if o3.any() else None,
    }
    logger.info("reduced %s with p1=%g, gamma in [%g, %g], eta_tilde=%g", spec.name, p1, g.min(), g.max(), threshold.eta_tilde)
    return dataclasses.replace(
        spec,
        kind=ProblemKind.REDUCED,
        name=f"{spec.name}-reduced",
        p=ExponentField.constant(grid, p1, "p0"),
        growth=ExponentField.from_values(grid, derived.theta.values, "alpha"),
        sign=sign,
        nonlinearity=nonlinearity,
        coefficients={k: GridFunction(grid, values) for k, values in c.items()},
        floor=floor,
        eta=threshold.eta_tilde,
        p1=None,
        leading_factor=spec.leading_factor * (p1 - 1.0),
        gamma=derived.gamma,
        young_epsilon=None,
        manufactured=manufactured,
        config=None,
        provenance=provenance,
    )
