"""pn-space seminorms, the power homeomorphism onto W^{1,beta}, and embedding predicates."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .exponent_field import ExponentField
from .grid import GridFunction, QuadratureRule, gradient, signed_power
from .modular_spaces import sobolev_norm


@dataclass(frozen=True)
class PnIndex:
    alpha: float
    beta: float
    m: int = 1

    def __post_init__(self):
        if self.alpha < 0.0:
            raise DomainError(f"pn index alpha = {self.alpha} must be >= 0")
        if self.beta < 1.0:
            raise DomainError(f"pn index beta = {self.beta} must be >= 1")
        if self.m != 1:
            raise DomainError("only first-order pn spaces are supported")

    @property
    def order(self) -> float:
        return self.alpha + self.beta

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}


def pn_energy(u: GridFunction, idx: PnIndex) -> float:
    """sum_i of the integral of |u|^alpha |D_i u|^beta."""
    rule = QuadratureRule.for_grid(u.grid)
    weight = np.abs(u.values) ** idx.alpha
    return sum(rule.integrate(weight * np.abs(d) ** idx.beta) for d in gradient(u))


def pn_seminorm(u: GridFunction, idx: PnIndex) -> float:
    return pn_energy(u, idx) ** (1.0 / idx.order)


def gradient_energy(u: GridFunction, beta: float) -> float:
    """sum_i of the integral of |D_i u|^beta."""
    return pn_energy(u, PnIndex(0.0, beta))


def pn_phi(u: GridFunction, idx: PnIndex) -> GridFunction:
    """t -> |t|^{alpha/beta} t."""
    return u.with_values(signed_power(u.values, idx.alpha / idx.beta))


def pn_phi_inverse(v: GridFunction, idx: PnIndex) -> GridFunction:
    """t -> |t|^{-alpha/(alpha+beta)} t."""
    return v.with_values(signed_power(v.values, -idx.alpha / idx.order))


def pn_metric(u: GridFunction, v: GridFunction, idx: PnIndex) -> float:
    """W^{1,beta} distance between the images under ``pn_phi``."""
    u.grid.require_same(v.grid)
    diff = pn_phi(u, idx) - pn_phi(v, idx)
    return sobolev_norm(diff, ExponentField.constant(u.grid, idx.beta, "beta"))


@dataclass(frozen=True)
class PnEmbeddingReport:
    exponent: float | None
    continuous: bool | None
    compact: bool | None
    w0_inclusion: bool | None
    inclusion: bool | None

    def to_dict(self) -> dict:
        return {
            "exponent": "undefined" if self.exponent is None else self.exponent,
            "continuous": "undefined" if self.continuous is None else self.continuous,
            "compact": "undefined" if self.compact is None else self.compact,
            "w0_inclusion": self.w0_inclusion,
            "inclusion": self.inclusion,
        }


def pn_embedding_exponent(idx: PnIndex, n: int) -> float | None:
    """n(alpha+beta)/(n-beta), or None when n <= beta."""
    if n <= idx.beta:
        return None
    return n * idx.order / (n - idx.beta)


def pn_inclusion(idx: PnIndex, other: PnIndex) -> bool:
    """S_{1,alpha,beta} is contained in S_{1,alpha1,beta1} for ``other`` = (alpha1, beta1)."""
    return idx.beta >= other.beta and other.alpha / other.beta >= idx.alpha / idx.beta and other.order <= idx.order


def pn_embedding_report(idx: PnIndex, n: int, r: float | None = None, p: float | None = None, other: PnIndex | None = None) -> PnEmbeddingReport:
    """Embedding predicates for the pn space of ``idx``.

    ``r`` is the target Lebesgue exponent, ``p`` the W_0^{1,p} exponent and
    ``other`` a second pn index for the inclusion between pn spaces.
    """
    exponent = pn_embedding_exponent(idx, n)
    continuous = compact = None
    if exponent is not None and r is not None:
        continuous = exponent >= r
        compact = exponent > r
    return PnEmbeddingReport(
        exponent=exponent,
        continuous=continuous,
        compact=compact,
        w0_inclusion=None if p is None else p >= idx.order,
        inclusion=None if other is None else pn_inclusion(idx, other),
    )
