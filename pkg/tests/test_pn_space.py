import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.varexp.core.errors import DomainError
from src.varexp.core.exponent_field import critical_exponents
from src.varexp.core.grid import Grid, GridFunction
from src.varexp.core.pn_space import (
    PnIndex,
    gradient_energy,
    pn_embedding_exponent,
    pn_embedding_report,
    pn_energy,
    pn_inclusion,
    pn_metric,
    pn_phi,
    pn_phi_inverse,
    pn_seminorm,
)


def sine(nodes):
    grid = Grid(((0.0, 1.0),), (nodes,))
    return GridFunction.from_function(grid, lambda x: np.sin(np.pi * x))


@pytest.mark.parametrize("alpha,beta", [(-1.0, 2.0), (1.0, 0.5)])
def test_invalid_index(alpha, beta):
    with pytest.raises(DomainError):
        PnIndex(alpha, beta)


@pytest.mark.parametrize("alpha,beta", [(0.0, 2.0), (1.0, 2.0), (2.0, 3.0)])
def test_round_trip(alpha, beta):
    rng = np.random.default_rng(3)
    grid = Grid(((0.0, 1.0),), (64,))
    u = GridFunction(grid, rng.normal(size=grid.shape))
    idx = PnIndex(alpha, beta)
    assert_allclose(pn_phi_inverse(pn_phi(u, idx), idx).values, u.values, rtol=1e-12, atol=1e-14)


def test_zero_index_is_the_gradient_seminorm():
    u = sine(201)
    assert pn_energy(u, PnIndex(0.0, 2.0)) == pytest.approx(gradient_energy(u, 2.0))
    assert pn_seminorm(u, PnIndex(0.0, 2.0)) == pytest.approx(math.pi / math.sqrt(2.0), rel=1e-4)


@pytest.mark.parametrize("alpha,beta", [(1.0, 2.0), (2.0, 2.0)])
def test_chain_rule_energy_converges_at_second_order(alpha, beta):
    idx = PnIndex(alpha, beta)
    factor = (idx.order / beta) ** beta
    nodes = [41, 81, 161, 321]
    errors = []
    for n in nodes:
        u = sine(n)
        errors.append(abs(gradient_energy(pn_phi(u, idx), beta) - factor * pn_energy(u, idx)))
    orders = [math.log(e0 / e1, 2.0) for e0, e1 in zip(errors, errors[1:])]
    assert errors[-1] < errors[0]
    assert orders[-1] == pytest.approx(2.0, abs=0.3)


def test_metric_is_zero_on_the_diagonal_and_symmetric():
    u = sine(101)
    v = u * 0.5
    idx = PnIndex(1.0, 2.0)
    assert pn_metric(u, u, idx) == 0.0
    assert pn_metric(u, v, idx) == pytest.approx(pn_metric(v, u, idx))
    assert pn_metric(u, v, idx) > 0.0


@pytest.mark.parametrize("p0,n", [(2.0, 3), (3.0, 4), (5.5, 10)])
def test_embedding_exponent_is_the_critical_exponent(p0, n):
    q0, p_tilde = critical_exponents(p0, n)
    assert pn_embedding_exponent(PnIndex((p0 - 2.0) * q0, q0), n) == pytest.approx(p_tilde, rel=1e-12)


def test_embedding_exponent_undefined_when_beta_reaches_n():
    assert pn_embedding_exponent(PnIndex(1.0, 3.0), 3) is None
    report = pn_embedding_report(PnIndex(1.0, 3.0), 3, r=2.0)
    assert report.to_dict()["continuous"] == "undefined"


def test_embedding_report():
    # n(alpha+beta)/(n-beta) = 3 * 3 / 1 = 9
    report = pn_embedding_report(PnIndex(1.0, 2.0), 3, r=9.0, p=3.0, other=PnIndex(1.0, 2.0))
    assert report.exponent == pytest.approx(9.0)
    assert report.continuous and not report.compact
    assert report.w0_inclusion
    assert report.inclusion


@pytest.mark.parametrize("other,expected", [
    ((1.0, 2.0), True),
    ((0.5, 2.0), False),
    ((1.0, 1.5), True),
    ((2.0, 2.0), False),
])
def test_inclusion(other, expected):
    assert pn_inclusion(PnIndex(1.0, 2.0), PnIndex(*other)) is expected
