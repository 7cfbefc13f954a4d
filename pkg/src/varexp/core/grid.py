"""Uniform tensor grids, nodal grid functions and nodal quadrature."""

import functools
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, GridMismatchError

# Relative tolerance used when matching CSV coordinates against grid nodes.
COORDINATE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Grid:
    """A uniform grid on a box in one or two dimensions.

    ``analysis_dimension`` is the space dimension n that enters the exponent
    formulas. It is independent of the grid dimension.
    """

    extents: tuple[tuple[float, float], ...]
    nodes: tuple[int, ...]
    analysis_dimension: int = 3

    def __post_init__(self):
        extents = tuple((float(lo), float(hi)) for lo, hi in self.extents)
        nodes = tuple(int(n) for n in self.nodes)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "nodes", nodes)

        if len(nodes) not in (1, 2):
            raise ConfigError(f"grid dimension must be 1 or 2, got {len(nodes)}")
        if len(extents) != len(nodes):
            raise ConfigError("grid extents and node counts must have the same length")
        for axis, ((lo, hi), count) in enumerate(zip(extents, nodes)):
            if not hi > lo:
                raise ConfigError(f"grid axis {axis}: extent [{lo}, {hi}] is empty")
            if count < 3:
                raise ConfigError(f"grid axis {axis}: at least 3 nodes required, got {count}")
        if math.prod(nodes) < 9:
            raise ConfigError("grid must have at least 9 nodes in total")
        if int(self.analysis_dimension) < 2:
            raise ConfigError(f"analysis dimension must be >= 2, got {self.analysis_dimension}")
        object.__setattr__(self, "analysis_dimension", int(self.analysis_dimension))

    @property
    def dimension(self) -> int:
        return len(self.nodes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def size(self) -> int:
        return math.prod(self.nodes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.nodes))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def measure(self) -> float:
        return math.prod(hi - lo for lo, hi in self.extents)

    @property
    def interior(self) -> tuple[slice, ...]:
        return tuple(slice(1, -1) for _ in self.nodes)

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(n - 2 for n in self.nodes)

    @functools.cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(self.extents, self.nodes))

    @functools.cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Nodal coordinate arrays of shape ``self.shape``."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @functools.cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        mask[self.interior] = False
        mask.setflags(write=False)
        return mask

    def node_coordinates(self, index: int) -> tuple[float, ...]:
        """Coordinates of the node with row-major flat ``index``."""
        multi = np.unravel_index(int(index), self.shape)
        return tuple(float(axis[i]) for axis, i in zip(self.axes, multi))

    def with_nodes(self, nodes: tuple[int, ...] | list[int]) -> "Grid":
        """Same box and analysis dimension, different resolution."""
        return Grid(self.extents, tuple(nodes), self.analysis_dimension)

    def require_same(self, other: "Grid", what: str = "operands") -> None:
        if self != other:
            raise GridMismatchError(f"{what} live on different grids: {self.nodes} vs {other.nodes}")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real nodal values on a grid.

    With ``dirichlet_zero`` set every boundary value is exactly zero.
    """

    grid: Grid
    values: np.ndarray
    dirichlet_zero: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.shape:
            if values.size != self.grid.size:
                raise GridMismatchError(f"{values.size} values given for a grid of {self.grid.size} nodes")
            values = values.reshape(self.grid.shape)
        if self.dirichlet_zero and np.any(values[self.grid.boundary_mask] != 0.0):
            index = int(np.flatnonzero((values != 0.0) & self.grid.boundary_mask)[0])
            raise DomainError(f"boundary value at node {self.grid.node_coordinates(index)} is not zero")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn, dirichlet_zero: bool = False) -> "GridFunction":
        values = np.broadcast_to(np.asarray(fn(*grid.coordinates), dtype=float), grid.shape).copy()
        if dirichlet_zero:
            values[grid.boundary_mask] = 0.0
        return cls(grid, values, dirichlet_zero)

    @classmethod
    def zeros(cls, grid: Grid, dirichlet_zero: bool = True) -> "GridFunction":
        return cls(grid, np.zeros(grid.shape), dirichlet_zero)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "GridFunction":
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, values, self.dirichlet_zero)

    def with_dirichlet_zero(self) -> "GridFunction":
        values = self.values.copy()
        values[self.grid.boundary_mask] = 0.0
        return GridFunction(self.grid, values, True)

    def max_abs(self, mask: np.ndarray | None = None) -> float:
        values = self.values if mask is None else self.values[mask]
        return float(np.max(np.abs(values))) if values.size else 0.0

    def _combine(self, other: "GridFunction", op) -> "GridFunction":
        self.grid.require_same(other.grid)
        return GridFunction(self.grid, op(self.values, other.values), self.dirichlet_zero and other.dirichlet_zero)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return self._combine(other, np.add)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return self._combine(other, np.subtract)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * float(scalar), self.dirichlet_zero)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return self * -1.0


class QuadratureKind(str, Enum):
    TRAPEZOID = "trapezoid"
    MIDPOINT = "midpoint"


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodal quadrature weights for integrals over the grid box.

    The trapezoid rule is the default. The midpoint rule treats every node as
    the centre of one of ``grid.size`` equal cells; it is first order and only
    meant for cross-checking.
    """

    grid: Grid
    kind: QuadratureKind
    weights: np.ndarray

    @classmethod
    def for_grid(cls, grid: Grid, kind: QuadratureKind | str = QuadratureKind.TRAPEZOID) -> "QuadratureRule":
        return _quadrature(grid, QuadratureKind(kind))

    def integrate(self, values: np.ndarray, mask: np.ndarray | None = None) -> float:
        if mask is None:
            return float(np.sum(self.weights * values))
        return float(np.sum(self.weights[mask] * np.asarray(values)[mask]))


@functools.lru_cache(maxsize=64)
def _quadrature(grid: Grid, kind: QuadratureKind) -> QuadratureRule:
    if kind is QuadratureKind.MIDPOINT:
        weights = np.full(grid.shape, grid.measure / grid.size)
    else:
        factors = []
        for h, n in zip(grid.spacing, grid.nodes):
            w = np.full(n, h)
            w[0] = w[-1] = h / 2.0
            factors.append(w)
        weights = factors[0] if grid.dimension == 1 else np.multiply.outer(factors[0], factors[1])
    weights.setflags(write=False)
    return QuadratureRule(grid, kind, weights)


def gradient(u: GridFunction) -> tuple[np.ndarray, ...]:
    """Discrete partial derivatives, one array per axis.

    Central differences at interior nodes and second-order one-sided
    differences at boundary nodes. No zero ghost value is assumed outside
    the domain, so boundary slopes stay second order.
    """
    grads = np.gradient(u.values, *u.grid.spacing, edge_order=2)
    if u.grid.dimension == 1:
        return (grads,)
    return tuple(grads)


def signed_power(values: np.ndarray, exponent) -> np.ndarray:
    """Nodal map t -> |t|^e t with 0 -> 0, valid for e > -1."""
    values = np.asarray(values, dtype=float)
    return np.sign(values) * np.abs(values) ** (1.0 + np.asarray(exponent, dtype=float))


def write_grid_csv(path: Path | str, grid: Grid, columns: dict[str, np.ndarray]) -> None:
    """Write nodal columns as CSV with coordinate columns first, row-major."""
    names = ["x", "y"][: grid.dimension] + list(columns)
    data = [c.ravel() for c in grid.coordinates] + [np.asarray(v, dtype=float).ravel() for v in columns.values()]
    np.savetxt(path, np.column_stack(data), delimiter=",", fmt="%.17g", header=",".join(names), comments="")


def read_grid_csv(path: Path | str, grid: Grid, column: str = "value") -> np.ndarray:
    """Read one nodal column from a CSV table laid out like ``write_grid_csv``."""
    path = Path(path)
    try:
        with open(path, "r") as f:
            header = [name.strip() for name in f.readline().split(",")]
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read table {path}: {e}") from e

    expected = ["x", "y"][: grid.dimension]
    if header[: grid.dimension] != expected or column not in header:
        raise ConfigError(f"table {path}: header must be {','.join(expected)},...,{column}; got {','.join(header)}")
    if table.shape[0] != grid.size:
        raise ConfigError(f"table {path}: {table.shape[0]} rows for a grid of {grid.size} nodes")

    for axis, coords in enumerate(grid.coordinates):
        lo, hi = grid.extents[axis]
        if not np.allclose(table[:, axis], coords.ravel(), rtol=0.0, atol=COORDINATE_TOLERANCE * (hi - lo)):
            raise ConfigError(f"table {path}: coordinates do not match the grid nodes (row-major order expected)")
    return table[:, header.index(column)].reshape(grid.shape)
