"""The pointwise nonlinearity a(x, tau) or c(x, tau) of a problem."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .expressions import ARGUMENT, COORDINATES, Expression
from .grid import Grid

logger = logging.getLogger(__name__)

# Relative step of the central difference used for d/dtau.
DERIVATIVE_STEP = 6e-6
# Values at tau = 0 that come out as 0 * inf are taken as the limit from this distance.
_LIMIT_OFFSET = 1e-150
_PROBES = (0.0, 1e-3, -1e-3, 1.0, -1.0, 1e3, -1e3)


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Closed-form nonlinearity evaluated nodally.

    ``fields`` holds nodal values for every name the expression uses besides
    the coordinates and ``tau``: coefficient fields and exponent fields.
    """

    expression: Expression
    grid: Grid
    fields: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        missing = [n for n in self.expression.names if n not in (*COORDINATES, ARGUMENT) and n not in self.fields]
        if missing:
            raise ConfigError(f"nonlinearity {self.expression.text!r} uses undeclared field(s) {', '.join(missing)}")
        if "y" in self.expression.names and self.grid.dimension < 2:
            raise ConfigError("nonlinearity uses y on a one-dimensional grid")
        frozen = {}
        for name, values in self.fields.items():
            array = np.array(np.broadcast_to(values, self.grid.shape), dtype=float)
            array.setflags(write=False)
            frozen[name] = array
        object.__setattr__(self, "fields", frozen)

    def _namespace(self, nodes: np.ndarray | None) -> dict[str, np.ndarray]:
        names = set(self.expression.names)
        space = {}
        for axis, coords in zip(COORDINATES, self.grid.coordinates):
            if axis in names:
                space[axis] = coords if nodes is None else coords.ravel()[nodes]
        for name, values in self.fields.items():
            if name in names:
                space[name] = values if nodes is None else values.ravel()[nodes]
        return space

    def _raw(self, tau: np.ndarray, nodes: np.ndarray | None) -> np.ndarray:
        return self.expression.evaluate(tau.shape, tau=tau, **self._namespace(nodes))

    def __call__(self, tau, nodes: np.ndarray | None = None) -> np.ndarray:
        """Values at ``tau``; nodal arrays of grid shape, or flat node indices with ``nodes``."""
        tau = np.asarray(tau, dtype=float)
        if nodes is None:
            tau = np.broadcast_to(tau, self.grid.shape)
        else:
            nodes = np.asarray(nodes, dtype=int)
            tau = np.broadcast_to(tau, nodes.shape)
        result = self._raw(tau, nodes)

        at_zero = (tau == 0.0) & ~np.isfinite(result)
        if at_zero.any():
            sub = None if nodes is None else nodes
            above = self._raw(np.where(at_zero, _LIMIT_OFFSET, tau), sub)
            below = self._raw(np.where(at_zero, -_LIMIT_OFFSET, tau), sub)
            result = np.where(at_zero, 0.5 * (above + below), result)
        return result

    def derivative(self, tau, nodes: np.ndarray | None = None) -> np.ndarray:
        """d/dtau by central differences."""
        tau = np.asarray(tau, dtype=float)
        step = DERIVATIVE_STEP * np.maximum(1.0, np.abs(tau))
        return (self(tau + step, nodes) - self(tau - step, nodes)) / (2.0 * step)

    def validate(self) -> None:
        """Every node must give finite values on a set of probe arguments."""
        for probe in _PROBES:
            values = self(np.full(self.grid.shape, probe))
            bad = ~np.isfinite(values)
            if bad.any():
                node = self.grid.node_coordinates(int(np.flatnonzero(bad)[0]))
                raise ConfigError(f"nonlinearity {self.expression.text!r} is not finite at node {node}, tau = {probe}")

    def substitute_argument(self, replacement: Expression, **fields: np.ndarray) -> "Nonlinearity":
        """The nonlinearity composed with an inner map tau -> replacement(x, tau)."""
        merged = {**self.fields, **fields}
        return Nonlinearity(self.expression.substitute(ARGUMENT, replacement), self.grid, merged)

    def to_dict(self) -> dict:
        return {"expression": self.expression.text, "fields": sorted(self.fields)}
