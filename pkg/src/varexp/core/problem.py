"""Problem descriptions: parsing problem files, sampling them on a grid, writing them back.

A problem file is TOML (or JSON, which is what ``write_problem`` emits)::

    kind = "reduced_1_2"            # or "main_1_1"
    name = "cubic-absorption"

    [grid]
    extents = [[0.0, 1.0]]
    nodes = [65]
    analysis_dimension = 3

    [exponents]                     # main_1_1 uses p, xi, xi1
    p0 = 3
    alpha = "4"
    alpha1 = 2

    [nonlinearity]
    expression = "c4*abs(tau)^(alpha-2)*tau"

    [coefficients]                  # main_1_1 uses a0 ... a5
    c0 = 1
    c4 = 1
    floor = 1.0

    [source]
    h = "-pi^2*cos(2*pi*x)"

    [parameters]
    eta = 0.05

A field is a number, an expression, or ``{csv = "table.csv"}`` relative to the
problem file. Optional sections: ``[fields]`` (extra named nodal data the
nonlinearity may use), ``[manufactured]`` (``solution``, ``mode``),
``[study]`` (``grids``) and ``[norms]`` (``function``, ``exponent``, ``pn``).
"""

import dataclasses
import json
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .exponent_field import DEFAULT_ETA, ExponentField
from .expressions import Expression
from .grid import Grid, GridFunction, read_grid_csv, write_grid_csv
from .nonlinearity import Nonlinearity

logger = logging.getLogger(__name__)

COEFFICIENTS = range(6)
MANUFACTURED_MODES = ("analytic", "discrete")
_SECTIONS = {"kind", "name", "grid", "exponents", "nonlinearity", "coefficients", "fields", "source", "manufactured", "parameters", "study", "norms", "provenance"}
_PARAMETERS = {"eta", "p1", "young_epsilon", "leading_factor"}


class ProblemKind(str, Enum):
    MAIN = "main_1_1"
    REDUCED = "reduced_1_2"

    @property
    def p_name(self) -> str:
        return "p" if self is ProblemKind.MAIN else "p0"

    @property
    def growth_name(self) -> str:
        return "xi" if self is ProblemKind.MAIN else "alpha"

    @property
    def sign_name(self) -> str:
        return "xi1" if self is ProblemKind.MAIN else "alpha1"

    @property
    def symbol(self) -> str:
        return "a" if self is ProblemKind.MAIN else "c"

    def coefficient_name(self, k: int) -> str:
        return f"{self.symbol}{k}"


@dataclass(frozen=True)
class FieldSource:
    """Where a nodal field comes from: an expression or a CSV table."""

    expression: Expression | None = None
    table: Path | None = None

    @classmethod
    def parse(cls, raw, base_dir: Path, where: str) -> "FieldSource":
        if isinstance(raw, dict):
            if set(raw) != {"csv"}:
                raise ConfigError(f"{where}: a table field must be written as {{csv = \"path\"}}")
            return cls(table=base_dir / raw["csv"])
        try:
            return cls(expression=Expression.parse(raw))
        except ConfigError as e:
            raise ConfigError(f"{where}: {e}") from e

    def sample(self, grid: Grid) -> np.ndarray:
        if self.table is not None:
            return read_grid_csv(self.table, grid)
        coords = dict(zip(("x", "y"), grid.coordinates))
        return self.expression.evaluate(grid.shape, **coords)


@dataclass(frozen=True)
class ProblemConfig:
    """A parsed problem file, independent of grid resolution."""

    kind: ProblemKind
    name: str
    base_dir: Path
    extents: tuple[tuple[float, float], ...]
    nodes: tuple[int, ...]
    analysis_dimension: int
    exponents: dict[str, FieldSource]
    nonlinearity: str
    coefficients: dict[int, FieldSource]
    floor: float = 0.0
    fields: dict[str, FieldSource] = field(default_factory=dict)
    source: FieldSource | None = None
    manufactured: FieldSource | None = None
    manufactured_mode: str = "analytic"
    eta: float | None = None
    p1: float | None = None
    young_epsilon: float | None = None
    leading_factor: float = 1.0
    study_grids: tuple[int, ...] = ()
    norms: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def with_overrides(self, **overrides) -> "ProblemConfig":
        """Replace parameters that are not None; ``nodes`` may be a tuple or a single count."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if "nodes" in changes:
            nodes = changes["nodes"]
            changes["nodes"] = tuple(nodes) if isinstance(nodes, (tuple, list)) else (int(nodes),) * len(self.nodes)
        if "eta" in changes and not 0.0 < changes["eta"] < 1.0:
            raise ConfigError(f"eta = {changes['eta']} must lie in (0, 1)")
        return dataclasses.replace(self, **changes)

    def grid(self, nodes: tuple[int, ...] | None = None) -> Grid:
        return Grid(self.extents, nodes or self.nodes, self.analysis_dimension)

    def build(self, nodes: tuple[int, ...] | None = None) -> "ProblemSpec":
        """Sample every field on the grid and assemble the problem."""
        grid = self.grid(nodes)
        kind = self.kind

        p_values = self._required(kind.p_name).sample(grid)
        p = ExponentField.from_values(grid, p_values, kind.p_name, expression=self._required(kind.p_name).expression)
        p.require_p_field()
        if kind is ProblemKind.REDUCED and not p.is_constant:
            raise ConfigError(f"{kind.p_name} must be constant for a {kind.value} problem")
        if self.analysis_dimension < 3 and kind is ProblemKind.MAIN:
            logger.warning("analysis dimension %d < 3 for a main problem", self.analysis_dimension)

        growth_source = self._required(kind.growth_name)
        growth = ExponentField.from_values(grid, growth_source.sample(grid), kind.growth_name, expression=growth_source.expression)
        sign = None
        if kind.sign_name in self.exponents:
            values = self.exponents[kind.sign_name].sample(grid)
            sign = ExponentField.from_values(grid, values, kind.sign_name, support=np.isfinite(values))

        coefficients = {}
        for k in COEFFICIENTS:
            name = kind.coefficient_name(k)
            values = self.coefficients[k].sample(grid) if k in self.coefficients else np.zeros(grid.shape)
            if np.any(values < 0.0) or not np.all(np.isfinite(values)):
                raise ConfigError(f"coefficient {name} must be finite and nonnegative at every node")
            coefficients[k] = GridFunction(grid, values)

        extra = {name: source.sample(grid) for name, source in self.fields.items()}
        gamma = ExponentField.from_values(grid, extra["gamma"], "gamma") if "gamma" in extra else None

        namespace = {
            kind.p_name: p.values,
            kind.growth_name: growth.values,
            **{kind.coefficient_name(k): c.values for k, c in coefficients.items()},
            **extra,
        }
        if sign is not None:
            namespace[kind.sign_name] = np.where(sign.support, sign.values, 0.0)
        try:
            expression = Expression.parse(self.nonlinearity, names=tuple(namespace))
        except ConfigError as e:
            raise ConfigError(f"nonlinearity.expression: {e}") from e
        nonlinearity = Nonlinearity(expression, grid, namespace)
        nonlinearity.validate()

        spec = ProblemSpec(
            kind=kind,
            name=self.name,
            grid=grid,
            p=p,
            growth=growth,
            sign=sign,
            nonlinearity=nonlinearity,
            coefficients=coefficients,
            floor=self.floor,
            source=GridFunction.zeros(grid, dirichlet_zero=False),
            eta=DEFAULT_ETA if self.eta is None else self.eta,
            p1=self.p1,
            leading_factor=self.leading_factor,
            gamma=gamma,
            young_epsilon=self.young_epsilon,
            config=self,
            provenance=dict(self.provenance),
        )
        if self.manufactured is not None:
            solution = GridFunction(grid, self.manufactured.sample(grid))
            if solution.max_abs(grid.boundary_mask) > 1e-12 * max(1.0, solution.max_abs()):
                logger.warning("manufactured solution of %s does not vanish on the boundary; boundary values are dropped", self.name)
            spec = dataclasses.replace(spec, manufactured=solution.with_dirichlet_zero())
        if self.source is not None:
            return dataclasses.replace(spec, source=GridFunction(grid, self.source.sample(grid)))
        if spec.manufactured is not None:
            # deferred import: manufactured sources need the reduction and the stencil
            from .manufactured import manufactured_source

            return dataclasses.replace(spec, source=manufactured_source(spec, self.manufactured_mode))
        return spec

    def _required(self, name: str) -> FieldSource:
        if name not in self.exponents:
            raise ConfigError(f"exponents.{name} is required for a {self.kind.value} problem")
        return self.exponents[name]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A problem sampled on a grid."""

    kind: ProblemKind
    name: str
    grid: Grid
    p: ExponentField
    growth: ExponentField
    sign: ExponentField | None
    nonlinearity: Nonlinearity
    coefficients: dict[int, GridFunction]
    floor: float
    source: GridFunction
    eta: float = DEFAULT_ETA
    p1: float | None = None
    leading_factor: float = 1.0
    gamma: ExponentField | None = None
    young_epsilon: float | None = None
    manufactured: GridFunction | None = None
    config: ProblemConfig | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def is_main(self) -> bool:
        return self.kind is ProblemKind.MAIN

    @property
    def p0(self) -> float:
        if self.is_main:
            raise DomainError("p0 is only defined for reduced problems")
        return float(self.p.values.flat[0])

    @property
    def reduction_exponent(self) -> float:
        """p1 for the main problem, defaulting to min p."""
        return self.p.minimum if self.p1 is None else float(self.p1)

    def coefficient(self, k: int) -> GridFunction:
        return self.coefficients[k]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "grid": {"extents": [list(e) for e in self.grid.extents], "nodes": list(self.grid.nodes), "analysis_dimension": self.grid.analysis_dimension},
            "exponents": {f.name: f.to_dict() for f in (self.p, self.growth, self.sign) if f is not None},
            "nonlinearity": self.nonlinearity.expression.text,
            "eta": self.eta,
            "p1": self.p1,
            "leading_factor": self.leading_factor,
        }


def _decode(text: str, path: Path) -> dict:
    if not text.strip():
        raise ConfigError(f"{path}: problem file is empty")
    if path.suffix.lower() == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e


def _number(raw, where: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{where} must be a number, got {raw!r}")
    return float(raw)


def parse_config(data: dict, base_dir: Path, name: str = "problem") -> ProblemConfig:
    """Validate the decoded contents of a problem file."""
    if not data:
        raise ConfigError(f"{name}: problem file is empty")
    unknown = sorted(set(data) - _SECTIONS)
    if unknown:
        raise ConfigError(f"{name}: unknown section(s) {', '.join(unknown)}")
    try:
        kind = ProblemKind(data.get("kind"))
    except ValueError:
        raise ConfigError(f"{name}: kind must be one of {', '.join(k.value for k in ProblemKind)}, got {data.get('kind')!r}") from None

    grid = data.get("grid")
    if not isinstance(grid, dict) or "extents" not in grid or "nodes" not in grid:
        raise ConfigError(f"{name}: [grid] needs extents and nodes")
    try:
        extents = tuple((float(lo), float(hi)) for lo, hi in grid["extents"])
        nodes = tuple(int(n) for n in grid["nodes"])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}: grid.extents must be [[lo, hi], ...] and grid.nodes a list of integers") from e
    analysis_dimension = int(grid.get("analysis_dimension", 3))

    exponents = {key: FieldSource.parse(raw, base_dir, f"exponents.{key}") for key, raw in data.get("exponents", {}).items()}
    allowed = {kind.p_name, kind.growth_name, kind.sign_name}
    if set(exponents) - allowed:
        raise ConfigError(f"{name}: exponents for {kind.value} are {', '.join(sorted(allowed))}; got {', '.join(sorted(set(exponents) - allowed))}")

    coefficients = {}
    floor = 0.0
    for key, raw in data.get("coefficients", {}).items():
        if key == "floor":
            floor = _number(raw, "coefficients.floor")
            continue
        if len(key) != 2 or key[0] != kind.symbol or not key[1].isdigit() or int(key[1]) not in COEFFICIENTS:
            raise ConfigError(f"{name}: coefficient names for {kind.value} are {kind.symbol}0 ... {kind.symbol}5, got {key}")
        coefficients[int(key[1])] = FieldSource.parse(raw, base_dir, f"coefficients.{key}")

    nonlinearity = data.get("nonlinearity", {})
    expression = nonlinearity.get("expression", "0") if isinstance(nonlinearity, dict) else nonlinearity

    fields = {key: FieldSource.parse(raw, base_dir, f"fields.{key}") for key, raw in data.get("fields", {}).items()}

    source = None
    if "source" in data:
        if set(data["source"]) != {"h"}:
            raise ConfigError(f"{name}: [source] takes a single key h")
        source = FieldSource.parse(data["source"]["h"], base_dir, "source.h")

    manufactured = None
    mode = "analytic"
    if "manufactured" in data:
        section = data["manufactured"]
        if "solution" not in section:
            raise ConfigError(f"{name}: [manufactured] needs a solution")
        manufactured = FieldSource.parse(section["solution"], base_dir, "manufactured.solution")
        mode = section.get("mode", "analytic")
        if mode not in MANUFACTURED_MODES:
            raise ConfigError(f"{name}: manufactured.mode must be one of {', '.join(MANUFACTURED_MODES)}")

    parameters = data.get("parameters", {})
    if set(parameters) - _PARAMETERS:
        raise ConfigError(f"{name}: unknown parameter(s) {', '.join(sorted(set(parameters) - _PARAMETERS))}")
    eta = None if "eta" not in parameters else _number(parameters["eta"], "parameters.eta")
    if eta is not None and not 0.0 < eta < 1.0:
        raise ConfigError(f"{name}: parameters.eta = {eta} must lie in (0, 1)")
    p1 = parameters.get("p1")
    young_epsilon = parameters.get("young_epsilon")

    return ProblemConfig(
        kind=kind,
        name=str(data.get("name", name)),
        base_dir=base_dir,
        extents=extents,
        nodes=nodes,
        analysis_dimension=analysis_dimension,
        exponents=exponents,
        nonlinearity=str(expression),
        coefficients=coefficients,
        floor=floor,
        fields=fields,
        source=source,
        manufactured=manufactured,
        manufactured_mode=mode,
        eta=eta,
        p1=None if p1 is None else _number(p1, "parameters.p1"),
        young_epsilon=None if young_epsilon is None else _number(young_epsilon, "parameters.young_epsilon"),
        leading_factor=_number(parameters.get("leading_factor", 1.0), "parameters.leading_factor"),
        study_grids=tuple(int(n) for n in data.get("study", {}).get("grids", ())),
        norms=dict(data.get("norms", {})),
        provenance=dict(data.get("provenance", {})),
    )


def load_config(path: Path | str) -> ProblemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read problem file {path}: {e}") from e
    return parse_config(_decode(text, path), path.parent, path.stem)


def load_problem(path: Path | str, **overrides) -> ProblemSpec:
    return load_config(path).with_overrides(**overrides).build()


def _field_entry(values: np.ndarray, grid: Grid, directory: Path, stem: str, name: str, columns: dict):
    finite = values[np.isfinite(values)]
    if finite.size == values.size and finite.size and np.all(finite == finite[0]):
        return float(finite[0])
    filename = f"{stem}.{name}.csv"
    write_grid_csv(directory / filename, grid, {"value": values})
    columns[name] = filename
    return {"csv": filename}


def write_problem(spec: ProblemSpec, directory: Path | str, stem: str | None = None) -> Path:
    """Emit ``spec`` as a JSON problem file plus one CSV table per non-constant field."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = stem or spec.name
    kind = spec.kind
    grid = spec.grid
    tables: dict[str, str] = {}

    def entry(values, name):
        return _field_entry(np.asarray(values, dtype=float), grid, directory, stem, name, tables)

    exponents = {kind.p_name: entry(spec.p.values, kind.p_name), kind.growth_name: entry(spec.growth.values, kind.growth_name)}
    if spec.sign is not None:
        exponents[kind.sign_name] = entry(spec.sign.values, kind.sign_name)

    standard = {kind.p_name, kind.growth_name, kind.sign_name, *(kind.coefficient_name(k) for k in COEFFICIENTS)}
    fields = {name: entry(values, name) for name, values in sorted(spec.nonlinearity.fields.items()) if name not in standard}
    if spec.gamma is not None and "gamma" not in fields:
        fields["gamma"] = entry(spec.gamma.values, "gamma")

    coefficients = {kind.coefficient_name(k): entry(c.values, kind.coefficient_name(k)) for k, c in sorted(spec.coefficients.items())}
    coefficients["floor"] = spec.floor

    parameters = {"eta": spec.eta, "leading_factor": spec.leading_factor}
    if spec.p1 is not None:
        parameters["p1"] = spec.p1
    if spec.young_epsilon is not None:
        parameters["young_epsilon"] = spec.young_epsilon

    document = {
        "kind": kind.value,
        "name": spec.name,
        "grid": {"extents": [list(e) for e in grid.extents], "nodes": list(grid.nodes), "analysis_dimension": grid.analysis_dimension},
        "exponents": exponents,
        "fields": fields,
        "nonlinearity": {"expression": spec.nonlinearity.expression.text},
        "coefficients": coefficients,
        "source": {"h": entry(spec.source.values, "h")},
        "parameters": parameters,
        "provenance": spec.provenance,
    }
    path = directory / f"{stem}.json"
    with open(path, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
    logger.info("wrote %s with %d table(s)", path, len(tables))
    return path
