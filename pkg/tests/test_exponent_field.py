import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.varexp.core.errors import ConfigError, DomainError
from src.varexp.core.exponent_field import (
    ExponentField,
    beta_fields,
    conjugate,
    critical_exponents,
    derived_fields,
    mu_fields,
    partition,
)
from src.varexp.core.expressions import Expression
from src.varexp.core.grid import Grid


@pytest.fixture
def grid():
    return Grid(((0.0, 1.0),), (21,), analysis_dimension=3)


def test_bounds_are_inferred(grid):
    p = ExponentField.from_expression(grid, Expression.parse("2 + x"))
    assert p.lower == pytest.approx(2.0)
    assert p.upper == pytest.approx(3.0)
    assert not p.is_constant


def test_declared_bounds_are_enforced(grid):
    with pytest.raises(DomainError):
        ExponentField.from_values(grid, np.linspace(2.0, 3.0, 21), lower=2.5)


def test_nan_must_be_flagged(grid):
    values = np.full(grid.shape, 2.0)
    values[3] = np.nan
    with pytest.raises(DomainError):
        ExponentField.from_values(grid, values)
    field = ExponentField.from_values(grid, values, infinite=np.isnan(values))
    assert field.maximum == float("inf")


def test_p_field_needs_two(grid):
    with pytest.raises(DomainError):
        ExponentField.constant(grid, 1.5).require_p_field()
    ExponentField.constant(grid, 2.0).require_p_field()


def test_conjugate(grid):
    values = np.array([1.0] + [2.0] * 19 + [np.nan])
    p = ExponentField.from_values(grid, values, infinite=np.isnan(values))
    q = conjugate(p)
    assert q.infinite[0]
    assert_allclose(q.values[1:20], 2.0)
    assert q.values[20] == 1.0


def test_conjugate_below_one(grid):
    with pytest.raises(DomainError):
        conjugate(ExponentField.constant(grid, 0.5))


@pytest.mark.parametrize("seed", range(5))
def test_critical_exponent_matches_embedding_exponent(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        p0 = rng.uniform(2.0, 6.0)
        n = int(rng.integers(3, 11))
        q0, p_tilde = critical_exponents(p0, n)
        alpha, beta = (p0 - 2.0) * q0, q0
        assert p_tilde == pytest.approx(n * (alpha + beta) / (n - beta), rel=1e-12)


def test_critical_exponent_undefined_in_low_dimension():
    with pytest.raises(DomainError):
        critical_exponents(2.0, 2)


def test_partition_regimes(grid):
    p0 = 3.0
    _, p_tilde = critical_exponents(p0, 3)
    alpha = ExponentField.from_values(grid, np.linspace(1.0, p_tilde + 1.0, 21), "alpha")
    part = partition(alpha, p0, 0.1, p_tilde)
    a = alpha.values
    assert np.array_equal(part.omega1, a < p0 - 0.1)
    assert np.array_equal(part.omega3, a >= p_tilde)
    assert not np.any(part.omega1 & part.omega2)
    assert np.all(part.omega1 | part.omega2 | part.omega3)
    assert part.regime == "with_omega3"


@pytest.mark.parametrize("alpha,regime", [(1.5, "omega1_only"), (2.95, "omega1_omega2"), (10.0, "with_omega3")])
def test_regime_labels(grid, alpha, regime):
    _, p_tilde = critical_exponents(3.0, 3)
    part = partition(ExponentField.constant(grid, alpha, "alpha"), 3.0, 0.1, p_tilde)
    assert part.regime == regime


def test_partition_against_variable_reference_exponents(grid):
    x = grid.coordinates[0]
    p = 2.0 + x / 2.0
    alpha = ExponentField.from_values(grid, 2.0 + 0.1 * x, "alpha")
    from_arrays = partition(alpha, p, 0.05, p + 1.0)
    p_field = ExponentField.from_values(grid, p, "p")
    from_fields = partition(alpha, p_field, 0.05, ExponentField.from_values(grid, p + 1.0, "p_tilde"))
    assert np.array_equal(from_arrays.omega1, from_fields.omega1)
    assert np.array_equal(from_arrays.omega1, alpha.values < p - 0.05)
    assert np.array_equal(from_arrays.omega2, ~from_arrays.omega1)
    assert_allclose(from_arrays.p_tilde, p + 1.0)


@pytest.mark.parametrize("eta", [0.0, 1.0, -0.1])
def test_partition_eta_range(grid, eta):
    with pytest.raises(ConfigError):
        partition(ExponentField.constant(grid, 1.5), 3.0, eta, 6.0)


def test_partition_needs_growth_above_one(grid):
    with pytest.raises(DomainError):
        partition(ExponentField.constant(grid, 0.5), 3.0, 0.1, 6.0)


def test_derived_fields(grid):
    p = ExponentField.from_expression(grid, Expression.parse("2 + x"))
    derived = derived_fields(p, 2.0, ExponentField.constant(grid, 3.0, "xi"))
    x = grid.coordinates[0]
    assert_allclose(derived.gamma.values, x)
    assert_allclose(derived.theta.values, (3.0 + x) / (1.0 + x))
    assert derived.q1 == pytest.approx(2.0)
    assert derived.p1_tilde == pytest.approx(6.0)
    assert_allclose(derived.p_tilde.values, 6.0 * (1.0 + x) - x)


def test_derived_fields_reject_p1_above_p(grid):
    p = ExponentField.from_expression(grid, Expression.parse("2 + x"))
    with pytest.raises(DomainError):
        derived_fields(p, 2.5, ExponentField.constant(grid, 3.0))


def test_beta_fields_on_omega1(grid):
    alpha = ExponentField.constant(grid, 1.5, "alpha")
    part = partition(alpha, 3.0, 0.1, 6.0)
    beta = beta_fields(part, alpha, 3.0, 6.0)
    # alpha* = 3, beta = 3 * 3 / (3 - 1.5)
    assert_allclose(beta.beta1.values, 3.0)
    assert_allclose(beta.beta.values, 6.0)


def test_beta_fields_on_omega3_are_infinite(grid):
    alpha = ExponentField.constant(grid, 7.0, "alpha")
    part = partition(alpha, 3.0, 0.1, 6.0)
    beta = beta_fields(part, alpha, 3.0, 6.0)
    assert beta.beta.infinite.all()
    assert_allclose(beta.beta1.values, 1.5)


def test_mu_fields_at_zero_gamma_are_the_beta_fields(grid):
    p = ExponentField.constant(grid, 2.0)
    xi = ExponentField.constant(grid, 1.5, "xi")
    derived = derived_fields(p, 2.0, xi)
    part = partition(xi, 2.0, 0.05, derived.p_tilde.values)
    mu = mu_fields(part, derived.theta, derived.gamma, xi, None, 2.0)
    beta = beta_fields(part, xi, 2.0, derived.p1_tilde)
    assert_allclose(mu.mu.values, beta.beta.values)
    assert_allclose(mu.mu4.values, beta.beta1.values)
    # xi* = 3 and mu = 2 * 3 / (2 - 1.5)
    assert_allclose(mu.mu.values, 12.0)
