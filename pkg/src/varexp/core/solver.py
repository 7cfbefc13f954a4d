"""Damped Newton solves in the flux variable, and grid-refinement studies.

The reduced problem is solved for w = |u|^{p0-2} u, in which the leading
term is a plain Laplacian and the nonlinearity becomes c(x, phi^{-1}(w)).
The main problem is reduced first and solved the same way.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import factorized, spsolve

from .errors import ConfigError, DomainError
from .estimates import membership_report, weak_residual
from .grid import GridFunction, signed_power
from .problem import ProblemSpec
from .stencil import embed, interior, laplacian, operator_variable
from .transform import phi1, phi1_inverse, reduce_problem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_steps: int = 100
    min_step: float = 2.0**-20
    regularization: float = 1e-12
    fixed_point_fallback: bool = False
    relaxation: float = 0.5
    fixed_point_steps: int = 1000

    def __post_init__(self):
        if not self.tolerance > 0.0:
            raise ConfigError(f"solver tolerance {self.tolerance} must be > 0")
        if self.regularization < 0.0:
            raise ConfigError(f"regularization floor {self.regularization} must be >= 0")
        if self.max_steps < 0 or not 0.0 < self.min_step <= 1.0:
            raise ConfigError("max_steps must be >= 0 and min_step in (0, 1]")
        if not 0.0 < self.relaxation <= 1.0:
            raise ConfigError(f"relaxation {self.relaxation} must lie in (0, 1]")


@dataclass
class SolveReport:
    status: str
    u: GridFunction
    w: GridFunction
    iterations: int
    final_residual: float
    history: list[float]
    method: str = "newton"
    guess: str = "linear"
    v: GridFunction | None = None
    trace: list[dict] = field(default_factory=list)
    weak_residual: dict | None = None
    reduced_residual: dict | None = None
    memberships: dict | None = None
    hypotheses: dict | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self) -> dict:
        result = {
            "status": self.status,
            "method": self.method,
            "guess": self.guess,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "residual_history": self.history,
            "weak_residual_max": None if self.weak_residual is None else self.weak_residual["max"],
            "weak_residual": self.weak_residual,
            "memberships": self.memberships,
            "hypotheses": self.hypotheses,
        }
        if self.reduced_residual is not None:
            result["reduced_residual"] = self.reduced_residual
        return result


class _System:
    """The discrete equations on interior nodes, scaled by the cell volume."""

    def __init__(self, spec: ProblemSpec, cfg: SolverConfig):
        grid = spec.grid
        self.spec = spec
        self.cfg = cfg
        self.nodes = np.flatnonzero(~grid.boundary_mask)
        self.volume = grid.cell_volume
        p0 = spec.p0
        self.factor = spec.leading_factor / (p0 - 1.0)
        self.exponent = (p0 - 2.0) / (p0 - 1.0)
        self.stiffness = sparse.csc_matrix(-self.factor * laplacian(grid))
        self.source = interior(grid, spec.source.values)
        self.floor = max(cfg.regularization, np.finfo(float).tiny)

    def to_u(self, w: np.ndarray) -> np.ndarray:
        return signed_power(w, -self.exponent)

    def residual(self, w: np.ndarray) -> np.ndarray:
        u = self.to_u(w)
        return self.volume * (self.stiffness @ w + self.spec.nonlinearity(u, self.nodes) - self.source)

    def jacobian(self, w: np.ndarray) -> sparse.csc_matrix:
        u = self.to_u(w)
        inverse_slope = np.maximum(np.abs(w), self.floor) ** (-self.exponent) / (self.spec.p0 - 1.0)
        diagonal = self.spec.nonlinearity.derivative(u, self.nodes) * inverse_slope
        return sparse.csc_matrix(self.volume * (self.stiffness + sparse.diags(diagonal)))

    def linear_guess(self) -> np.ndarray:
        """Solution with c frozen at c(x, 0)."""
        frozen = self.spec.nonlinearity(np.zeros(self.nodes.shape), self.nodes)
        return np.atleast_1d(spsolve(self.stiffness, self.source - frozen))


def _newton(system: _System, w: np.ndarray, cfg: SolverConfig, history: list[float], trace: list[dict]) -> tuple[np.ndarray, bool]:
    r = system.residual(w)
    norm = float(np.max(np.abs(r))) if r.size else 0.0
    history.append(norm)
    trace.append({"iteration": 0, "method": "newton", "residual": norm, "step": 0.0})
    for step in range(1, cfg.max_steps + 1):
        if norm <= cfg.tolerance:
            return w, True
        delta = np.atleast_1d(spsolve(system.jacobian(w), -r))
        t = 1.0
        while t >= cfg.min_step:
            candidate = w + t * delta
            r_new = system.residual(candidate)
            norm_new = float(np.max(np.abs(r_new)))
            if norm_new < norm:
                break
            t /= 2.0
        else:
            logger.debug("newton step %d: no decrease down to step %g", step, cfg.min_step)
            return w, False
        w, r, norm = candidate, r_new, norm_new
        history.append(norm)
        trace.append({"iteration": step, "method": "newton", "residual": norm, "step": t})
        logger.debug("newton step %d: residual %.3e, step %g", step, norm, t)
    return w, norm <= cfg.tolerance


def _fixed_point(system: _System, w: np.ndarray, cfg: SolverConfig, history: list[float], trace: list[dict]) -> tuple[np.ndarray, bool]:
    """w <- (1 - omega) w + omega K^{-1}(h - c(x, phi^{-1}(w)))."""
    solve = factorized(system.stiffness)
    for step in range(1, cfg.fixed_point_steps + 1):
        update = solve(system.source - system.spec.nonlinearity(system.to_u(w), system.nodes))
        w = (1.0 - cfg.relaxation) * w + cfg.relaxation * update
        norm = float(np.max(np.abs(system.residual(w))))
        history.append(norm)
        trace.append({"iteration": step, "method": "fixed_point", "residual": norm, "step": cfg.relaxation})
        if norm <= cfg.tolerance:
            return w, True
        if not math.isfinite(norm):
            break
    return w, False


def _solve_w(spec: ProblemSpec, cfg: SolverConfig, initial: GridFunction | None) -> SolveReport:
    if spec.is_main:
        raise DomainError(f"{spec.name} is a main problem; use solve_main")
    grid = spec.grid
    system = _System(spec, cfg)
    if initial is None:
        w0, guess = system.linear_guess(), "linear"
    else:
        grid.require_same(initial.grid, "initial guess and problem")
        w0, guess = interior(grid, operator_variable(initial.values, spec)[0]), "given"

    history: list[float] = []
    trace: list[dict] = []
    w, converged = _newton(system, w0, cfg, history, trace)
    method = "newton"
    if not converged and cfg.fixed_point_fallback:
        logger.info("%s: newton failed at residual %.3e; falling back to fixed-point iteration", spec.name, history[-1])
        w, converged = _fixed_point(system, w, cfg, history, trace)
        method = "fixed_point"

    u = GridFunction(grid, embed(grid, system.to_u(w)), dirichlet_zero=True)
    report = SolveReport(
        status="converged" if converged else "failed",
        u=u,
        w=GridFunction(grid, embed(grid, w), dirichlet_zero=True),
        iterations=len(history) - 1,
        final_residual=history[-1],
        history=history,
        method=method,
        guess=guess,
        trace=trace,
    )
    logger.info("solved %s: %s after %d iteration(s), residual %.3e", spec.name, report.status, report.iterations, report.final_residual)
    return report


def solve_reduced(spec: ProblemSpec, cfg: SolverConfig | None = None, initial: GridFunction | None = None) -> SolveReport:
    """Solve the constant-exponent problem; ``initial`` replaces the linear initial guess."""
    report = _solve_w(spec, cfg or SolverConfig(), initial)
    report.weak_residual = weak_residual(report.u, spec).to_dict()
    report.memberships = membership_report(report.u, spec)
    return report


def solve_main(spec: ProblemSpec, cfg: SolverConfig | None = None, initial: GridFunction | None = None) -> SolveReport:
    """Reduce, solve for v = |u|^gamma u, and map back."""
    if not spec.is_main:
        raise DomainError(f"{spec.name} is a reduced problem; use solve_reduced")
    reduced = reduce_problem(spec)
    guess = None if initial is None else phi1(initial, reduced.gamma)
    report = _solve_w(reduced, cfg or SolverConfig(), guess)
    v = report.u
    u = phi1_inverse(v, reduced.gamma)
    report.v = v
    report.u = u
    report.reduced_residual = weak_residual(v, reduced).to_dict()
    report.weak_residual = weak_residual(u, spec).to_dict()
    memberships = membership_report(u, spec)
    numbers = [value for value in memberships.values() if isinstance(value, float)]
    memberships["finite"] = bool(all(math.isfinite(value) for value in numbers))
    if not memberships["finite"]:
        logger.warning("%s: recovered solution has non-finite P0 diagnostics", spec.name)
    report.memberships = memberships
    return report


def solve(spec: ProblemSpec, cfg: SolverConfig | None = None, initial: GridFunction | None = None) -> SolveReport:
    return solve_main(spec, cfg, initial) if spec.is_main else solve_reduced(spec, cfg, initial)


@dataclass
class ConvergenceRow:
    nodes: int
    spacing: float
    error_w: float
    error_u: float
    iterations: int
    status: str
    order_w: float | None = None
    order_u: float | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConvergenceTable:
    problem: str
    rows: list[ConvergenceRow]

    @property
    def monotone(self) -> bool:
        errors = [row.error_w for row in self.rows]
        return all(b <= a for a, b in zip(errors, errors[1:]))

    @property
    def orders(self) -> list[float | None]:
        return [row.order_w for row in self.rows[1:]]

    def to_dict(self) -> dict:
        return {"problem": self.problem, "monotone": self.monotone, "rows": [row.to_dict() for row in self.rows]}


def _order(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float | None:
    if e_coarse <= 0.0 or e_fine <= 0.0:
        return None
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


def refinement_study(spec: ProblemSpec, grids: list[int] | tuple[int, ...], cfg: SolverConfig | None = None) -> ConvergenceTable:
    """Solve on each node count and measure max errors against the manufactured solution."""
    if spec.config is None:
        raise ConfigError(f"{spec.name} was not built from a problem file; a refinement study needs to rebuild it")
    if len(grids) < 2:
        raise ConfigError("a refinement study needs at least two grids")
    rows: list[ConvergenceRow] = []
    for count in sorted(grids):
        fine = spec.config.build(nodes=(int(count),) * spec.grid.dimension)
        if fine.manufactured is None:
            raise ConfigError(f"{spec.name} has no manufactured solution to measure errors against")
        report = solve(fine, cfg)
        exact = fine.manufactured
        w_exact = operator_variable(exact.values, fine)[0]
        w_solved = operator_variable(report.u.values, fine)[0]
        row = ConvergenceRow(
            nodes=int(count),
            spacing=fine.grid.spacing[0],
            error_w=float(np.max(np.abs(w_solved - w_exact))),
            error_u=float(np.max(np.abs(report.u.values - exact.values))),
            iterations=report.iterations,
            status=report.status,
        )
        if rows:
            prev = rows[-1]
            row.order_w = _order(prev.error_w, row.error_w, prev.spacing, row.spacing)
            row.order_u = _order(prev.error_u, row.error_u, prev.spacing, row.spacing)
        rows.append(row)
        logger.info("refinement %s N=%d: error_w=%.3e error_u=%.3e", spec.name, count, row.error_w, row.error_u)
    table = ConvergenceTable(spec.name, rows)
    if not table.monotone:
        logger.warning("%s: error sequence is not monotone under refinement", spec.name)
    return table
