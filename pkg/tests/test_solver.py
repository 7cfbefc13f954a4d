import numpy as np
import pytest
from conftest import build, problem_data

from src.varexp.core.errors import ConfigError, DomainError, GridMismatchError
from src.varexp.core.grid import GridFunction
from src.varexp.core.solver import SolverConfig, refinement_study, solve, solve_main, solve_reduced
from src.varexp.core.transform import phi1, reduce_problem


def sine_problem(**extra):
    return problem_data(manufactured={"solution": "sin(pi*x)"}, **extra)


def main_problem():
    return problem_data(
        "main_1_1",
        nonlinearity={"expression": "a1*tau/(1 + abs(tau))"},
        coefficients={"a1": 1},
        parameters={"p1": 2},
        manufactured={"solution": "x*(1 - x)", "mode": "discrete"},
    )


def test_sine_refinement_is_second_order():
    spec = build(sine_problem())
    table = refinement_study(spec, [65, 129, 257, 513])
    assert [row.nodes for row in table.rows] == [65, 129, 257, 513]
    assert all(row.status == "converged" for row in table.rows)
    assert all(row.iterations <= 15 for row in table.rows)
    assert table.monotone
    assert table.rows[0].order_w is None
    for order in table.orders:
        assert order == pytest.approx(2.0, abs=0.3)


def test_nonlinear_reduced_problem_converges_quickly():
    data = sine_problem(nonlinearity={"expression": "c4*abs(tau)^(alpha-2)*tau"}, coefficients={"c4": 1})
    report = solve(build(data, nodes=65))
    assert report.converged
    assert report.iterations <= 15
    assert report.history[-1] <= 1e-10
    assert report.memberships["space"] == "Q0"
    assert report.weak_residual["max"] <= 1e-8 * report.weak_residual["scale"]


def test_main_problem_recovers_the_discrete_solution():
    spec = build(main_problem())
    report = solve(spec)
    assert report.converged
    assert report.v is not None
    assert np.max(np.abs(report.u.values - spec.manufactured.values)) <= 1e-8
    assert report.reduced_residual["max"] <= 1e-8 * report.reduced_residual["scale"]
    assert report.weak_residual["max"] <= 1e-8 * report.weak_residual["scale"]
    assert report.memberships["finite"]


def test_variable_exponent_main_problem_matches_the_direct_reduced_solve():
    data = problem_data(
        "main_1_1",
        exponents={"p": "2 + x/2", "xi": 2},
        nonlinearity={"expression": "abs(tau)^(xi-2)*tau"},
        parameters={"p1": 2},
        manufactured={"solution": "x*(1 - x)", "mode": "discrete"},
    )
    spec = build(data)
    report = solve(spec)
    assert report.converged
    assert np.max(np.abs(report.u.values - spec.manufactured.values)) <= 1e-8
    reduced = reduce_problem(spec)
    direct = solve_reduced(reduced)
    assert np.max(np.abs(phi1(report.u, reduced.gamma).values - direct.u.values)) <= 1e-9
    assert report.weak_residual["max"] <= 1e-8 * report.weak_residual["scale"]


def test_newton_residuals_decrease():
    report = solve(build(main_problem()))
    assert report.method == "newton"
    assert len(report.history) >= 2
    assert all(later < earlier for earlier, later in zip(report.history, report.history[1:]))
    assert [row["iteration"] for row in report.trace] == list(range(len(report.history)))


def test_even_data_give_a_symmetric_solution():
    data = problem_data(
        exponents={"p0": 3, "alpha": "2 + x*(1 - x)"},
        nonlinearity={"expression": "c4*abs(tau)^(alpha-2)*tau"},
        coefficients={"c4": 1},
        source={"h": "1 + cos(2*pi*x)"},
    )
    report = solve(build(data, nodes=65))
    assert report.converged
    u = report.u.values
    assert np.max(np.abs(u)) > 0.0
    assert np.max(np.abs(u - u[::-1])) <= 1e-10


def test_fixed_point_fallback():
    data = problem_data(
        exponents={"p0": 2, "alpha": 2},
        nonlinearity={"expression": "c4*tau"},
        coefficients={"c4": 1},
        manufactured={"solution": "sin(pi*x)"},
    )
    spec = build(data)
    reference = solve(spec)
    assert reference.method == "newton"
    failed = solve(spec, SolverConfig(max_steps=0))
    assert failed.status == "failed"
    report = solve(spec, SolverConfig(max_steps=0, fixed_point_fallback=True))
    assert report.method == "fixed_point"
    assert report.converged
    assert {row["method"] for row in report.trace} == {"newton", "fixed_point"}
    assert np.max(np.abs(report.u.values - reference.u.values)) <= 1e-8


def test_given_initial_guess():
    spec = build(sine_problem(), nodes=65)
    initial = GridFunction.from_function(spec.grid, lambda x: 0.5 * np.sin(np.pi * x), dirichlet_zero=True)
    report = solve(spec, initial=initial)
    assert report.guess == "given"
    assert report.converged


def test_initial_guess_on_another_grid():
    spec = build(sine_problem(), nodes=65)
    other = build(sine_problem(), nodes=33)
    with pytest.raises(GridMismatchError):
        solve(spec, initial=other.manufactured)


def test_solves_are_deterministic():
    spec = build(main_problem())
    first, second = solve(spec), solve(spec)
    assert np.array_equal(first.u.values, second.u.values)
    assert first.history == second.history


def test_wrong_solver_for_the_kind():
    with pytest.raises(DomainError):
        solve_reduced(build(main_problem()))
    with pytest.raises(DomainError):
        solve_main(build(sine_problem()))


@pytest.mark.parametrize("kwargs", [
    {"tolerance": 0.0},
    {"regularization": -1.0},
    {"max_steps": -1},
    {"min_step": 0.0},
    {"relaxation": 1.5},
])
def test_solver_config_validation(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_refinement_needs_two_grids():
    with pytest.raises(ConfigError):
        refinement_study(build(sine_problem()), [65])


def test_refinement_needs_a_manufactured_solution():
    with pytest.raises(ConfigError):
        refinement_study(build(problem_data()), [17, 33])


def test_report_serializes():
    report = solve(build(sine_problem(), nodes=33))
    payload = report.to_dict()
    assert payload["status"] == "converged"
    assert payload["weak_residual_max"] == report.weak_residual["max"]
    assert "reduced_residual" not in payload
