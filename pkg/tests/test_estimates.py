import numpy as np
import pytest
from conftest import build, problem_data
from numpy.testing import assert_allclose

from src.varexp.core.errors import DomainError
from src.varexp.core.estimates import (
    check_hypotheses,
    coercivity_report,
    dual_bound,
    dual_bound_check,
    growth_check,
    membership_report,
    weak_residual,
)
from src.varexp.core.grid import Grid, GridFunction
from src.varexp.core.stencil import hat_residuals


def omega1_only():
    return problem_data(
        exponents={"p0": 3, "alpha": 1.5},
        nonlinearity={"expression": "-c0*sign(tau)*abs(tau)^(alpha-1) + c1"},
        coefficients={"c0": 1, "c1": 0.5},
    )


def omega1_omega2():
    return problem_data(
        exponents={"p0": 3, "alpha": "2 + 2*x", "alpha1": 2},
        nonlinearity={"expression": "-c2*sign(tau)*abs(tau)^(alpha1-1) + abs(tau)^(alpha-2)*tau"},
        coefficients={"c0": 1.5, "c1": 0.5, "c2": 0.5},
    )


def omega2_only():
    return problem_data(
        exponents={"p0": 3, "alpha": 4, "alpha1": 2},
        nonlinearity={"expression": "c4*abs(tau)^(alpha-2)*tau"},
        coefficients={"c0": 1, "c4": 1},
    )


def omega3_dominant():
    data = problem_data(
        exponents={"p0": 2, "alpha": 4},
        nonlinearity={"expression": "c4*abs(tau)^(alpha-2)*tau"},
        coefficients={"c0": 1, "c4": 1, "floor": 1.0},
    )
    data["grid"]["analysis_dimension"] = 4
    return data


def statuses(report):
    return {e.condition_id: ("skipped" if e.skipped else e.passed) for e in report.entries}


def test_omega1_only_skips_the_sign_conditions():
    report = check_hypotheses(build(omega1_only()))
    assert report.passed
    assert report.partition["regime"] == "omega1_only"
    status = statuses(report)
    for condition in ("sign_omega2", "sign_omega3", "floor_omega3", "c2_integrable", "c3_integrable", "c4_bounded", "c5_integrable"):
        assert status[condition] == "skipped"
    assert status["growth"] is True
    assert status["c0_integrable"] is True


def test_omega2_instance_skips_omega3():
    report = check_hypotheses(build(omega2_only()))
    assert report.passed
    assert report.partition["regime"] == "omega1_omega2"
    status = statuses(report)
    assert status["sign_omega2"] is True
    assert status["sign_exponent_range"] is True
    assert status["sign_omega3"] == "skipped"
    assert status["floor_omega3"] == "skipped"


def test_omega3_instance_passes():
    report = check_hypotheses(build(omega3_dominant()))
    assert report.partition["regime"] == "with_omega3"
    assert report.passed
    assert report.entry("floor_omega3").margin == pytest.approx(0.0)


def test_misdeclared_growth_exponent_fails_with_a_witness():
    data = omega1_only()
    data["nonlinearity"] = {"expression": "c0*abs(tau)^2*tau"}
    report = check_hypotheses(build(data))
    assert not report.passed
    entry = report.entry("growth")
    assert not entry.passed
    assert entry.margin < 0.0
    assert abs(entry.witness["tau"]) > 1.0
    assert 0.0 <= entry.witness["node"][0] <= 1.0


def test_sign_condition_failure():
    data = omega2_only()
    data["nonlinearity"] = {"expression": "-c4*abs(tau)^(alpha-2)*tau"}
    report = check_hypotheses(build(data))
    assert not report.entry("sign_omega2").passed
    assert report.entry("growth").passed


def test_floor_failure():
    data = omega3_dominant()
    data["coefficients"]["floor"] = 2.0
    report = check_hypotheses(build(data))
    entry = report.entry("floor_omega3")
    assert not entry.passed
    assert entry.margin == pytest.approx(-1.0)


def test_sign_exponent_must_stay_below_p0():
    data = omega2_only()
    data["exponents"]["alpha1"] = 3
    assert not check_hypotheses(build(data)).entry("sign_exponent_range").passed


def test_missing_sign_exponent_on_omega2():
    data = omega2_only()
    del data["exponents"]["alpha1"]
    report = check_hypotheses(build(data))
    assert not report.entry("sign_omega2").passed
    assert not report.passed


def test_main_problem_passes():
    data = problem_data("main_1_1", nonlinearity={"expression": "a1*tau/(1 + abs(tau))"}, coefficients={"a1": 1}, parameters={"p1": 2})
    report = check_hypotheses(build(data))
    assert report.passed
    assert report.kind == "main_1_1"
    assert {"a0_integrable", "a1_integrable", "xi_above_one"} <= set(statuses(report))


def test_low_analysis_dimension_is_reported():
    data = problem_data("main_1_1", parameters={"p1": 2})
    data["grid"]["analysis_dimension"] = 2
    report = check_hypotheses(build(data))
    assert report.warnings
    assert not report.entry("partition").passed


def test_reports_are_deterministic():
    spec = build(omega1_omega2())
    assert check_hypotheses(spec, seed=3).to_dict() == check_hypotheses(spec, seed=3).to_dict()
    assert growth_check(spec, 10, seed=1).witness == growth_check(spec, 10, seed=1).witness


def test_sample_count_must_be_positive():
    with pytest.raises(DomainError):
        growth_check(build(omega1_only()), 0)


@pytest.mark.parametrize("make", [omega1_only, omega1_omega2, omega3_dominant])
def test_coercivity_bound_holds(make):
    spec = build(make())
    rng = np.random.default_rng(11)
    for _ in range(50):
        u = GridFunction(spec.grid, rng.normal(size=spec.grid.shape) * 10.0 ** rng.uniform(-2.0, 2.0)).with_dirichlet_zero()
        report = coercivity_report(u, spec, 0.1, 0.1, 0.1)
        assert report.holds, report.to_dict()


def test_coercivity_with_omega3_everywhere_has_no_young_terms():
    spec = build(omega3_dominant())
    u = GridFunction.from_function(spec.grid, lambda x: np.sin(np.pi * x), dirichlet_zero=True)
    report = coercivity_report(u, spec)
    assert report.pieces["regime"] == "with_omega3"
    assert report.pieces["C1"] == report.pieces["C2"] == report.pieces["C3"] == 0.0
    assert report.pieces["absorbed"] == 0.0
    assert report.lhs == pytest.approx(report.pieces["energy"] + report.pieces["pairing"])


@pytest.mark.parametrize("eps", [0.0, 1.5])
def test_coercivity_epsilon_range(eps):
    spec = build(omega1_only())
    with pytest.raises(DomainError):
        coercivity_report(GridFunction.zeros(spec.grid), spec, eps1=eps)


@pytest.mark.parametrize("p0", [2.0, 3.0, 4.0])
def test_dual_bound_has_no_violations(p0):
    grid = Grid(((0.0, 1.0),), (41,))
    rng = np.random.default_rng(int(p0))
    for _ in range(100):
        u = GridFunction(grid, rng.normal(size=grid.shape))
        v = GridFunction(grid, rng.normal(size=grid.shape)).with_dirichlet_zero()
        assert dual_bound(u, v, p0).holds


def test_dual_bound_check_zeroes_the_boundary():
    spec = build(omega1_only())
    u = GridFunction.from_function(spec.grid, lambda x: np.sin(np.pi * x))
    bound = dual_bound_check(u, GridFunction.constant(spec.grid, 1.0), spec)
    assert bound.holds


def test_weak_residual_of_the_discrete_solution_vanishes():
    data = problem_data(manufactured={"solution": "sin(pi*x)", "mode": "discrete"})
    spec = build(data)
    residual = weak_residual(spec.manufactured, spec)
    assert residual.max <= 1e-12 * residual.scale


def test_pairing_with_hats_matches_the_nodal_residual():
    data = problem_data(nonlinearity={"expression": "tau^3"}, source={"h": "x"})
    spec = build(data, nodes=17)
    u = GridFunction.from_function(spec.grid, lambda x: x * (1.0 - x) * np.exp(x), dirichlet_zero=True)
    grid = spec.grid
    hats = []
    for j in range(1, grid.nodes[0] - 1):
        values = np.zeros(grid.shape)
        values[j] = 1.0
        hats.append(GridFunction(grid, values, dirichlet_zero=True))
    paired = weak_residual(u, spec, hats).values
    assert_allclose(paired, hat_residuals(u, spec)[grid.interior], rtol=1e-10, atol=1e-14)


def test_reduced_membership_report():
    spec = build(omega1_only())
    u = GridFunction.from_function(spec.grid, lambda x: np.sin(np.pi * x), dirichlet_zero=True)
    report = membership_report(u, spec)
    assert report["space"] == "Q0"
    assert report["boundary_max"] == 0.0
    assert report["seminorm"] > 0.0


def test_main_membership_report():
    data = problem_data("main_1_1", parameters={"p1": 2})
    spec = build(data)
    u = GridFunction.from_function(spec.grid, lambda x: x * (1.0 - x), dirichlet_zero=True)
    report = membership_report(u, spec)
    assert report["space"] == "P0"
    assert report["log_moment"]["holds"]
    assert np.isfinite(report["flux"])
