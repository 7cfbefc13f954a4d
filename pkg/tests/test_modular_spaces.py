import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.varexp.core.errors import DomainError
from src.varexp.core.exponent_field import ExponentField
from src.varexp.core.expressions import Expression
from src.varexp.core.grid import Grid, GridFunction, QuadratureKind
from src.varexp.core.modular_spaces import embedding_check, inclusion_check, luxemburg_norm, modular, sobolev_norm


@pytest.fixture
def unit():
    return Grid(((0.0, 1.0),), (201,))


def random_functions(grid, count, seed=0):
    rng = np.random.default_rng(seed)
    return [GridFunction(grid, rng.normal(size=grid.shape) * rng.uniform(0.1, 10.0)) for _ in range(count)]


def variable_p(grid, text="2 + x"):
    return ExponentField.from_expression(grid, Expression.parse(text))


def test_modular_of_zero_and_one(unit):
    p = variable_p(unit)
    assert modular(GridFunction.zeros(unit), p) == 0.0
    assert modular(GridFunction.constant(unit, 1.0), p) == pytest.approx(1.0, rel=1e-14)


def test_modular_of_identity(unit):
    u = GridFunction.from_function(unit, lambda x: x)
    assert modular(u, ExponentField.constant(unit, 2.0)) == pytest.approx(1.0 / 3.0, abs=1e-4)


def test_modular_of_constants_is_exact(unit):
    u = GridFunction.constant(unit, 1.5)
    assert modular(u, ExponentField.constant(unit, 3.0)) == pytest.approx(1.5**3, rel=1e-14)


def test_modular_takes_the_max_on_infinite_nodes(unit):
    values = np.full(unit.shape, 2.0)
    infinite = unit.coordinates[0] > 0.5
    p = ExponentField.from_values(unit, np.where(infinite, np.nan, values), infinite=infinite)
    u = GridFunction.from_function(unit, lambda x: 3.0 * x)
    finite_part = modular(u, ExponentField.constant(unit, 2.0), ~infinite)
    assert modular(u, p) == pytest.approx(finite_part + 3.0)
    with pytest.raises(DomainError):
        luxemburg_norm(u, p)


@pytest.mark.parametrize("c", [-3.0, 0.25, 7.0])
def test_norm_of_constant_on_unit_measure(unit, c):
    assert luxemburg_norm(GridFunction.constant(unit, c), variable_p(unit)) == pytest.approx(abs(c), rel=1e-10)


def test_piecewise_exponent_norm():
    grid = Grid(((0.0, 2.0),), (100,))
    p = ExponentField.from_values(grid, np.where(grid.coordinates[0] < 1.0, 2.0, 4.0))
    lam = luxemburg_norm(GridFunction.constant(grid, 1.0), p, kind=QuadratureKind.MIDPOINT)
    expected = ((math.sqrt(5.0) - 1.0) / 2.0) ** -0.5
    assert lam == pytest.approx(expected, abs=1e-8)
    assert lam == pytest.approx(1.27202, abs=1e-5)


def test_constant_exponent_closed_form():
    grid = Grid(((0.0, 1.0),), (2001,))
    u = GridFunction.from_function(grid, lambda x: 1.0 + x)
    assert luxemburg_norm(u, ExponentField.constant(grid, 2.0)) == pytest.approx(math.sqrt(7.0 / 3.0), rel=1e-6)


@pytest.mark.parametrize("p0", [1.0, 2.0, 3.5])
def test_constant_exponent_agreement(unit, p0):
    p = ExponentField.constant(unit, p0)
    for u in random_functions(unit, 34):
        assert luxemburg_norm(u, p) == pytest.approx(modular(u, p) ** (1.0 / p0), rel=1e-10)


def test_unit_ball_and_homogeneity(unit):
    p = variable_p(unit)
    for u in random_functions(unit, 20, seed=1):
        lam = luxemburg_norm(u, p)
        assert abs(modular(u * (1.0 / lam), p) - 1.0) <= 1e-8
        for c in (-2.0, 0.5, 10.0):
            assert luxemburg_norm(u * c, p) == pytest.approx(abs(c) * lam, rel=1e-9)
        assert (modular(u, p) <= 1.0) == (lam <= 1.0 + 1e-10)


def test_triangle_inequality(unit):
    p = variable_p(unit, "1 + 2*x")
    functions = random_functions(unit, 40, seed=2)
    for u, v in zip(functions[::2], functions[1::2]):
        assert luxemburg_norm(u + v, p) <= luxemburg_norm(u, p) + luxemburg_norm(v, p) + 1e-9


def test_zero_norm(unit):
    assert luxemburg_norm(GridFunction.zeros(unit), variable_p(unit)) == 0.0
    assert sobolev_norm(GridFunction.zeros(unit), variable_p(unit)) == 0.0


def test_sobolev_norm_closed_form():
    grid = Grid(((0.0, 1.0),), (401,))
    u = GridFunction.from_function(grid, lambda x: x * (1.0 - x))
    expected = math.sqrt(1.0 / 30.0) + math.sqrt(1.0 / 3.0)
    assert sobolev_norm(u, ExponentField.constant(grid, 2.0)) == pytest.approx(expected, abs=1e-5)
    assert expected == pytest.approx(0.75996, abs=1e-4)


def test_sobolev_norm_self_convergence():
    def norm(nodes):
        grid = Grid(((0.0, 1.0),), (nodes,))
        u = GridFunction.from_function(grid, lambda x: np.sin(np.pi * x))
        return sobolev_norm(u, variable_p(grid))

    assert norm(101) == pytest.approx(norm(1001), abs=1e-3)


def test_inclusion(unit):
    three, two = ExponentField.constant(unit, 3.0), ExponentField.constant(unit, 2.0)
    assert inclusion_check(three, two).holds
    assert inclusion_check(two, two).holds
    result = inclusion_check(variable_p(unit), ExponentField.constant(unit, 2.5))
    assert not result.holds
    assert 0.0 <= result.witness[0] < 0.5


@pytest.mark.parametrize("q,n,holds", [(3.0, 3, True), (6.0, 3, False)])
def test_embedding_constant(unit, q, n, holds):
    assert embedding_check(1, ExponentField.constant(unit, 2.0), q, n).holds is holds


def test_embedding_fails_only_where_strictness_fails(unit):
    result = embedding_check(1, variable_p(unit), 4.0, 4)
    assert not result.holds
    assert result.failing.sum() == 1
    assert result.failing[0]
    assert_allclose(result.margin[0], 0.0, atol=1e-12)


def test_embedding_needs_subcritical_order(unit):
    result = embedding_check(1, ExponentField.constant(unit, 3.0), 2.0, 3)
    assert not result.holds
    assert np.isnan(result.margin).all()
