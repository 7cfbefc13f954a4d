"""Hypothesis checks and a-priori estimates on concrete problem instances.

Growth and sign conditions quantify over every real tau; a grid can only
sample them. Each check draws (node, tau) pairs with |tau| log-uniform in
[1e-6, 1e6] plus the probes 0 and +-1, and reports the worst case.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .exponent_field import DomainPartition, ExponentField, beta_fields, critical_exponents, mu_fields, partition
from .grid import GridFunction, QuadratureRule, gradient
from .modular_spaces import luxemburg_norm, modular
from .pn_space import PnIndex, pn_energy, pn_seminorm
from .problem import ProblemSpec
from .stencil import hat_residuals, pairing_residual
from .transform import log_moment_sides, main_partition, phi1, reduce_problem, transform_derivative_terms, young_constant

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 1000
# Relative allowance for rounding when comparing two sides of an inequality.
ROUNDING = 1e-12
_PROBES = (0.0, 1.0, -1.0)


@dataclass
class HypothesisEntry:
    condition_id: str
    inequality: str
    passed: bool
    margin: float | None = None
    witness: dict | None = None
    skipped: bool = False
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition_id": self.condition_id,
            "inequality": self.inequality,
            "pass": self.passed,
            "margin": self.margin,
            "witness": self.witness,
            "skipped": self.skipped,
            "detail": self.detail,
        }


@dataclass
class HypothesisReport:
    problem: str
    kind: str
    entries: list[HypothesisEntry] = field(default_factory=list)
    partition: dict | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, condition_id: str) -> HypothesisEntry:
        for e in self.entries:
            if e.condition_id == condition_id:
                return e
        raise KeyError(condition_id)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "kind": self.kind,
            "pass": self.passed,
            "partition": self.partition,
            "warnings": self.warnings,
            "conditions": [e.to_dict() for e in self.entries],
        }


def problem_partition(spec: ProblemSpec) -> DomainPartition:
    """Omega1/Omega2/Omega3 of the problem: alpha against p0 for reduced problems, xi against p(x) for main ones."""
    if spec.is_main:
        return main_partition(spec)[1]
    p_tilde = critical_exponents(spec.p0, spec.grid.analysis_dimension).p_tilde
    return partition(spec.growth, spec.p0, spec.eta, p_tilde)


def _names(spec: ProblemSpec) -> tuple[str, str, str]:
    kind = spec.kind
    return kind.symbol, kind.growth_name, kind.sign_name


def _draw(spec: ProblemSpec, mask: np.ndarray, samples: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    nodes = rng.choice(np.flatnonzero(mask), size=samples)
    tau = rng.choice([-1.0, 1.0], size=samples) * 10.0 ** rng.uniform(-6.0, 6.0, size=samples)
    k = min(len(_PROBES), samples)
    tau[:k] = _PROBES[:k]
    return nodes, tau


def _compare(condition_id: str, inequality: str, spec: ProblemSpec, nodes: np.ndarray, tau: np.ndarray, lhs: np.ndarray, rhs: np.ndarray) -> HypothesisEntry:
    """Entry for lhs <= rhs over the samples."""
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    with np.errstate(invalid="ignore"):
        margin = (rhs - lhs) / scale
    margin = np.where(np.isnan(margin), -np.inf, margin)
    worst = int(np.argmin(margin))
    passed = bool(np.all(margin >= -ROUNDING))
    witness = {"node": list(spec.grid.node_coordinates(int(nodes[worst]))), "tau": float(tau[worst])}
    entry = HypothesisEntry(condition_id, inequality, passed, float(margin[worst]), witness, detail={"samples": int(len(tau))})
    level = logging.DEBUG if passed else logging.INFO
    logger.log(level, "%s on %s: pass=%s margin=%g witness=%s", condition_id, spec.name, passed, entry.margin, witness)
    return entry


def _skipped(condition_id: str, inequality: str, reason: str) -> HypothesisEntry:
    return HypothesisEntry(condition_id, inequality, True, skipped=True, detail={"reason": reason})


def _flat(values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    return np.asarray(values).ravel()[nodes]


def growth_check(spec: ProblemSpec, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> HypothesisEntry:
    """|c(x,tau)| <= c0 |tau|^{alpha-1} + c1 at sampled (node, tau)."""
    if samples < 1:
        raise DomainError(f"samples = {samples} must be >= 1")
    k, growth, _ = _names(spec)
    inequality = f"|{k}(x,tau)| <= {k}0(x)|tau|^({growth}(x)-1) + {k}1(x)"
    rng = np.random.default_rng(seed)
    nodes, tau = _draw(spec, np.ones(spec.grid.shape, dtype=bool), samples, rng)
    lhs = np.abs(spec.nonlinearity(tau, nodes))
    with np.errstate(divide="ignore"):
        power = np.abs(tau) ** (_flat(spec.growth.values, nodes) - 1.0)
    rhs = _flat(spec.coefficient(0).values, nodes) * power + _flat(spec.coefficient(1).values, nodes)
    return _compare("growth", inequality, spec, nodes, tau, lhs, rhs)


def sign_checks(spec: ProblemSpec, samples: int = DEFAULT_SAMPLES, seed: int = 0, part: DomainPartition | None = None) -> list[HypothesisEntry]:
    """The lower bounds of c(x,tau) tau on omega2 and omega3, and the floor of the omega3 coefficient."""
    part = part or problem_partition(spec)
    k, growth, sign = _names(spec)
    omega2_text = f"{k}(x,tau)tau >= -{k}2(x)|tau|^{sign}(x) - {k}3(x) on omega2"
    omega3_text = f"{k}(x,tau)tau >= {k}4(x)|tau|^{growth}(x) - {k}5(x) on omega3"
    floor_text = f"{k}4(x) >= floor > 0 on omega3"
    if part.regime == "omega1_only":
        reason = "omega2 and omega3 are empty"
        return [_skipped("sign_omega2", omega2_text, reason), _skipped("sign_omega3", omega3_text, reason), _skipped("floor_omega3", floor_text, reason)]

    rng = np.random.default_rng(seed + 1)
    entries = []
    if not part.omega2.any():
        entries.append(_skipped("sign_omega2", omega2_text, "omega2 is empty"))
    elif spec.sign is None or np.any(part.omega2 & ~spec.sign.finite_mask):
        entries.append(HypothesisEntry("sign_omega2", omega2_text, False, detail={"reason": f"sign exponent {sign} is undefined on omega2"}))
    else:
        nodes, tau = _draw(spec, part.omega2, samples, rng)
        lhs = -spec.nonlinearity(tau, nodes) * tau
        with np.errstate(divide="ignore"):
            power = np.abs(tau) ** _flat(spec.sign.values, nodes)
        rhs = _flat(spec.coefficient(2).values, nodes) * power + _flat(spec.coefficient(3).values, nodes)
        entries.append(_compare("sign_omega2", omega2_text, spec, nodes, tau, lhs, rhs))

    if not part.omega3.any():
        reason = "omega3 is empty"
        entries += [_skipped("sign_omega3", omega3_text, reason), _skipped("floor_omega3", floor_text, reason)]
        return entries

    nodes, tau = _draw(spec, part.omega3, samples, rng)
    lhs = _flat(spec.coefficient(4).values, nodes) * np.abs(tau) ** _flat(spec.growth.values, nodes) - _flat(spec.coefficient(5).values, nodes)
    rhs = spec.nonlinearity(tau, nodes) * tau
    entries.append(_compare("sign_omega3", omega3_text, spec, nodes, tau, lhs, rhs))

    c4 = spec.coefficient(4).values
    lowest = float(np.min(c4[part.omega3]))
    passed = spec.floor > 0.0 and lowest >= spec.floor
    witness = {"node": list(spec.grid.node_coordinates(int(np.flatnonzero(part.omega3)[np.argmin(c4[part.omega3])])))}
    entries.append(HypothesisEntry("floor_omega3", floor_text, passed, lowest - spec.floor, witness, detail={"floor": spec.floor, "minimum": lowest}))
    return entries


def structural_checks(spec: ProblemSpec, part: DomainPartition) -> list[HypothesisEntry]:
    """Bounds on the growth and sign exponents themselves."""
    entries = []
    growth = spec.growth
    if spec.is_main:
        lowest = growth.minimum
        entries.append(HypothesisEntry("xi_above_one", "xi(x) > 1", lowest > 1.0, lowest - 1.0))
        text = "2 <= xi1(x) < p(x) on omega2"
    else:
        lowest = growth.minimum
        entries.append(HypothesisEntry("alpha_at_least_one", "alpha- >= 1", lowest >= 1.0, lowest - 1.0))
        text = "alpha1+ < p0 on omega2"

    if not part.omega2.any():
        entries.append(_skipped("sign_exponent_range", text, "omega2 is empty"))
        return entries
    if spec.sign is None or np.any(part.omega2 & ~spec.sign.finite_mask):
        entries.append(HypothesisEntry("sign_exponent_range", text, False, detail={"reason": "sign exponent is undefined on omega2"}))
        return entries
    s = spec.sign.values[part.omega2]
    p = spec.p.values[part.omega2]
    if spec.is_main:
        margin = float(min(np.min(s - 2.0), np.min(p - s)))
        passed = bool(np.all(s >= 2.0) and np.all(s < p))
    else:
        margin = float(spec.p0 - np.max(s))
        passed = margin > 0.0
    entries.append(HypothesisEntry("sign_exponent_range", text, passed, margin))
    return entries


def _integrability_entry(condition_id: str, inequality: str, coefficient: GridFunction, exponent: ExponentField, mask: np.ndarray) -> HypothesisEntry:
    if not mask.any():
        return _skipped(condition_id, inequality, "subdomain is empty")
    value = modular(coefficient, exponent, mask)
    detail = {"modular": value}
    if not np.any(exponent.infinite & mask):
        detail["norm"] = luxemburg_norm(coefficient, exponent, mask)
    return HypothesisEntry(condition_id, inequality, bool(np.isfinite(value)), detail=detail)


def _sup_entry(condition_id: str, inequality: str, coefficient: GridFunction, mask: np.ndarray) -> HypothesisEntry:
    if not mask.any():
        return _skipped(condition_id, inequality, "subdomain is empty")
    value = coefficient.max_abs(mask)
    return HypothesisEntry(condition_id, inequality, bool(np.isfinite(value)), detail={"norm": value})


def coefficient_integrability(spec: ProblemSpec, part: DomainPartition | None = None) -> list[HypothesisEntry]:
    """Required Lebesgue classes of the coefficients, with modulars and norms for audit."""
    part = part or problem_partition(spec)
    grid = spec.grid
    everywhere = np.ones(grid.shape, dtype=bool)
    c = spec.coefficient
    if spec.is_main:
        derived, _ = main_partition(spec)
        mu = mu_fields(part, derived.theta, derived.gamma, spec.growth, spec.sign, spec.reduction_exponent)
        return [
            _integrability_entry("a2_integrable", "a2 in L^mu1(omega2)", c(2), mu.mu1, part.omega2),
            _integrability_entry("a3_integrable", "a3 in L^mu2(omega2)", c(3), mu.mu2, part.omega2),
            _integrability_entry("a5_integrable", "a5 in L^mu3(omega3)", c(5), mu.mu3, part.omega3),
            _sup_entry("a4_bounded", "a4 in L^inf(omega3)", c(4), part.omega3),
            _integrability_entry("a1_integrable", "a1 in L^mu4(omega)", c(1), mu.mu4, everywhere),
            _integrability_entry("a0_integrable", "a0 in L^mu(omega)", c(0), mu.mu, everywhere),
        ]

    p0 = spec.p0
    entries = []
    if part.omega2.any() and spec.sign is not None and not np.any(part.omega2 & ~spec.sign.finite_mask):
        a1 = spec.sign.values
        exponent = np.full(grid.shape, np.nan)
        exponent[part.omega2] = p0 / (p0 - a1[part.omega2])
        c2_exponent = ExponentField.from_values(grid, exponent, "p0/(p0-alpha1)", support=part.omega2)
        entries.append(_integrability_entry("c2_integrable", "c2 in L^(p0/(p0-alpha1))(omega2)", c(2), c2_exponent, part.omega2))
    elif part.omega2.any():
        entries.append(HypothesisEntry("c2_integrable", "c2 in L^(p0/(p0-alpha1))(omega2)", False, detail={"reason": "sign exponent alpha1 is undefined on omega2"}))
    else:
        entries.append(_skipped("c2_integrable", "c2 in L^(p0/(p0-alpha1))(omega2)", "subdomain is empty"))

    one = ExponentField.constant(grid, 1.0, "1")
    beta = beta_fields(part, spec.growth, p0, float(np.max(part.p_tilde)))
    entries += [
        _integrability_entry("c3_integrable", "c3 in L^1(omega2)", c(3), one, part.omega2),
        _integrability_entry("c5_integrable", "c5 in L^1(omega3)", c(5), one, part.omega3),
        _sup_entry("c4_bounded", "c4 in L^inf(omega3)", c(4), part.omega3),
        _integrability_entry("c1_integrable", "c1 in L^beta1(omega)", c(1), beta.beta1, everywhere),
        _integrability_entry("c0_integrable", "c0 in L^beta(omega)", c(0), beta.beta, everywhere),
    ]
    return entries


def check_hypotheses(spec: ProblemSpec, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> HypothesisReport:
    """Every hypothesis of the existence theorem for ``spec``, skipping the vacuous ones."""
    report = HypothesisReport(spec.name, spec.kind.value)
    if spec.is_main and spec.grid.analysis_dimension < 3:
        report.warnings.append(f"analysis dimension {spec.grid.analysis_dimension} < 3")
    try:
        part = problem_partition(spec)
    except DomainError as e:
        report.entries.append(HypothesisEntry("partition", "exponent fields admit the partition", False, detail={"error": str(e)}))
        return report
    report.partition = part.to_dict()

    report.entries += structural_checks(spec, part)
    report.entries.append(growth_check(spec, samples, seed))
    report.entries += sign_checks(spec, samples, seed, part)
    try:
        report.entries += coefficient_integrability(spec, part)
    except DomainError as e:
        report.entries.append(HypothesisEntry("coefficient_integrability", "integrability exponents are defined", False, detail={"error": str(e)}))

    logger.info("checked %s: pass=%s regime=%s", spec.name, report.passed, part.regime)
    return report


@dataclass
class CoercivityReport:
    lhs: float
    bound: float
    pieces: dict

    @property
    def holds(self) -> bool:
        return self.lhs >= self.bound - ROUNDING * max(1.0, abs(self.lhs), abs(self.bound))

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "bound": self.bound, "holds": self.holds, "pieces": self.pieces}


def _reduced_pair(u: GridFunction, spec: ProblemSpec) -> tuple[GridFunction, ProblemSpec]:
    if spec.is_main:
        reduced = reduce_problem(spec)
        return phi1(u, reduced.gamma), reduced
    return u, spec


def coercivity_report(u: GridFunction, spec: ProblemSpec, eps1: float = 0.1, eps2: float = 0.1, eps3: float = 0.1) -> CoercivityReport:
    """The pairing of the operator with u against its explicit lower bound.

    lhs = kappa E(u) + integral of c(x,u)u, with E(u) the sum over i of the integral of
    |u|^{p0-2}|D_i u|^2. The bound replaces c(x,u)u by its growth bound on
    omega1 and its sign bounds on omega2 and omega3, then absorbs the
    coefficient terms by Young's inequality with eps1 (c0 on omega1),
    eps2 (c2 on omega2) and eps3 (c1 on omega1).
    """
    for eps in (eps1, eps2, eps3):
        if not 0.0 < eps <= 1.0:
            raise DomainError(f"Young epsilon {eps} must lie in (0, 1]")
    u, spec = _reduced_pair(u, spec)
    grid = spec.grid
    part = problem_partition(spec)
    rule = QuadratureRule.for_grid(grid)
    p0 = spec.p0
    q0 = p0 / (p0 - 1.0)
    kappa = spec.leading_factor
    a = np.abs(u.values)
    alpha = spec.growth.values
    c = {k: spec.coefficient(k).values for k in range(6)}

    energy = pn_energy(u, PnIndex(p0 - 2.0, 2.0))
    pairing = rule.integrate(spec.nonlinearity(u.values) * u.values)
    lhs = kappa * energy + pairing

    o1, o2, o3 = part.omega1, part.omega2, part.omega3
    power = a**p0
    with np.errstate(divide="ignore", invalid="ignore"):
        young1 = np.where(o1, young_constant(eps1, p0 / alpha) * c[0] ** (p0 / (p0 - alpha)), 0.0)
        young3 = np.where(o1, young_constant(eps3, p0) * c[1] ** q0, 0.0)
        if o2.any():
            a1 = np.where(o2, spec.sign.values, 0.0)
            young2 = np.where(o2, young_constant(eps2, p0 / a1) * c[2] ** (p0 / (p0 - a1)), 0.0)
        else:
            young2 = np.zeros(grid.shape)
    constants = {
        "C1": rule.integrate(young1),
        "C2": rule.integrate(young2),
        "C3": rule.integrate(young3),
        "c3_l1": rule.integrate(c[3], o2),
        "c5_l1": rule.integrate(c[5], o3),
    }
    absorbed = (eps1 + eps3) * rule.integrate(power, o1) + eps2 * rule.integrate(power, o2)
    omega3_term = spec.floor * rule.integrate(a**alpha, o3) if o3.any() else 0.0
    k_total = sum(constants.values())
    bound = kappa * energy - absorbed + omega3_term - k_total

    measured = (lhs - omega3_term + k_total) / energy if energy > 0.0 else None
    pieces = {
        "energy": energy,
        "pairing": pairing,
        "leading_factor": kappa,
        "absorbed": absorbed,
        "omega3_term": omega3_term,
        "K": k_total,
        "epsilons": [eps1, eps2, eps3],
        "measured_c5": measured,
        "regime": part.regime,
        **constants,
    }
    report = CoercivityReport(lhs, bound, pieces)
    logger.debug("coercivity on %s: lhs=%r bound=%r", spec.name, lhs, bound)
    return report


@dataclass
class DualBound:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1.0 + 1e-14)

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "holds": self.holds}


def dual_bound(u: GridFunction, v: GridFunction, p0: float) -> DualBound:
    """|sum_i integral of |u|^{p0-2} D_i u D_i v| against [u]^{p0-1} times the W_0^{1,p0} seminorm of v."""
    u.grid.require_same(v.grid)
    q0 = p0 / (p0 - 1.0)
    rule = QuadratureRule.for_grid(u.grid)
    weight = np.abs(u.values) ** (p0 - 2.0)
    lhs = abs(sum(rule.integrate(weight * du * dv) for du, dv in zip(gradient(u), gradient(v))))
    seminorm = pn_seminorm(u, PnIndex((p0 - 2.0) * q0, q0))
    v_norm = sum(rule.integrate(np.abs(dv) ** p0) for dv in gradient(v)) ** (1.0 / p0)
    return DualBound(lhs, seminorm ** (p0 - 1.0) * v_norm)


def dual_bound_check(u: GridFunction, v: GridFunction, spec: ProblemSpec) -> DualBound:
    if not v.dirichlet_zero:
        v = v.with_dirichlet_zero()
    if spec.is_main:
        u, spec = _reduced_pair(u, spec)
    return dual_bound(u, v, spec.p0)


@dataclass
class WeakResidual:
    values: np.ndarray
    scale: float

    @property
    def max(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def to_dict(self) -> dict:
        return {"max": self.max, "scale": self.scale, "tests": int(self.values.size)}


def data_scale(spec: ProblemSpec) -> float:
    """max(1, max|h|) times the measure of the domain."""
    return max(1.0, spec.source.max_abs()) * spec.grid.measure


def weak_residual(u: GridFunction, spec: ProblemSpec, tests: list[GridFunction] | None = None) -> WeakResidual:
    """r(w) = pairing of the operator at u with w minus that of h; nodal hats unless ``tests`` is given."""
    if tests is None:
        values = hat_residuals(u, spec)[spec.grid.interior].ravel()
    else:
        values = np.array([pairing_residual(u, spec, w if w.dirichlet_zero else w.with_dirichlet_zero()) for w in tests])
    return WeakResidual(values, data_scale(spec))


def membership_report(u: GridFunction, spec: ProblemSpec) -> dict:
    """Norms that place u in the solution class, finite on any grid; reported for audit."""
    grid = spec.grid
    boundary = u.max_abs(grid.boundary_mask)
    if not spec.is_main:
        p0 = spec.p0
        q0 = p0 / (p0 - 1.0)
        return {
            "space": "Q0",
            "seminorm": pn_seminorm(u, PnIndex((p0 - 2.0) * q0, q0)),
            "lebesgue_alpha": luxemburg_norm(u, spec.growth),
            "boundary_max": boundary,
        }

    derived, _ = main_partition(spec)
    n = grid.analysis_dimension
    q1 = derived.q1
    p = spec.p.values
    q1_field = ExponentField.constant(grid, q1, "q1")
    weight = np.abs(u.values) ** (p - 2.0)
    flux = sum(luxemburg_norm(GridFunction(grid, weight * d), q1_field) for d in gradient(u))
    sobolev_exponent = ExponentField.from_values(grid, n * q1 * (p - 1.0) / (n - q1), "nq1(p-1)/(n-q1)")
    growth_exponent = ExponentField.from_values(grid, spec.growth.values + derived.gamma.values, "xi+gamma")
    log_norm = sum(luxemburg_norm(term, q1_field) for term in transform_derivative_terms(u, spec.p).log_term)
    zeta = ExponentField.from_values(grid, q1 * (p - 1.0), "q1(p-1)")
    gap = float(np.min(sobolev_exponent.values - zeta.values))
    return {
        "space": "P0",
        "flux": flux,
        "lebesgue_sobolev": luxemburg_norm(u, sobolev_exponent),
        "lebesgue_growth": luxemburg_norm(u, growth_exponent),
        "log_term": log_norm,
        "log_moment": log_moment_sides(u, zeta, q1, gap).to_dict(),
        "boundary_max": boundary,
    }
