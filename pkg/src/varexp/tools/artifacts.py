"""Run options, result containers and artifact writing shared by every command."""

import hashlib
import json
import logging
import math
import platform
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
import psutil

from ..core.errors import ConfigError, NumericalError, VarexpError
from ..core.grid import Grid, write_grid_csv
from ..core.problem import ProblemConfig, ProblemSpec, load_config
from .state import GlobalState, state

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
COMMANDS = ("check", "solve", "norms", "transform", "study")


def exit_code_for(error: Exception) -> int:
    """Numerical breakdowns are failures; every other toolkit error is a configuration problem."""
    if isinstance(error, NumericalError):
        return EXIT_FAILURE
    if isinstance(error, VarexpError):
        return EXIT_CONFIG
    raise error


@dataclass(frozen=True)
class RunConfig:
    """One command on one problem file, with its overrides."""

    command: str
    problem: Path
    out: Path
    eta: float | None = None
    p1: float | None = None
    analysis_dimension: int | None = None
    nodes: int | None = None
    seed: int = 0
    tolerance: float = 1e-10
    samples: int = 1000
    force: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.nodes is not None and self.nodes < 3:
            raise ConfigError(f"--grid {self.nodes} must be >= 3")

    @classmethod
    def from_arguments(cls, command: str, arguments: dict, settings: GlobalState | None = None) -> "RunConfig":
        """Build from tool arguments; unset options fall back to the persisted defaults."""
        settings = settings or state
        problem = arguments.get("problem")
        if not problem:
            raise ConfigError("a problem file must be given")
        eta = arguments.get("eta")
        return cls(
            command=command,
            problem=Path(problem).expanduser(),
            out=Path(arguments.get("out") or settings.output_dir).expanduser(),
            eta=None if eta is None else float(eta),
            p1=None if arguments.get("p1") is None else float(arguments["p1"]),
            analysis_dimension=None if arguments.get("analysis_dim") is None else int(arguments["analysis_dim"]),
            nodes=None if arguments.get("grid") is None else int(arguments["grid"]),
            seed=int(arguments.get("seed", settings.seed)),
            tolerance=float(arguments.get("tolerance", settings.tolerance)),
            samples=int(arguments.get("samples", 1000)),
            force=bool(arguments.get("force", False)),
        )

    def problem_config(self, settings: GlobalState | None = None) -> ProblemConfig:
        """The problem file with overrides applied; eta falls back to the persisted default when the file sets none."""
        config = load_config(self.problem)
        eta = self.eta
        if eta is None and config.eta is None:
            eta = (settings or state).eta
        return config.with_overrides(eta=eta, p1=self.p1, analysis_dimension=self.analysis_dimension, nodes=self.nodes)

    def load(self) -> ProblemSpec:
        return self.problem_config().build()


@dataclass
class CommandResult:
    exit_code: int
    payload: dict
    artifacts: list[Path] = field(default_factory=list)

    def to_text(self) -> str:
        return dumps({"exit_code": self.exit_code, "artifacts": [str(p) for p in self.artifacts], **self.payload})


def jsonable(value):
    """Plain JSON data; non-finite floats become the strings "inf", "-inf" and "nan"."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(payload) -> str:
    return json.dumps(jsonable(payload), indent=2, sort_keys=True)


def write_json(path: Path, payload) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload) + "\n")
    return path


def write_rows(path: Path, columns: list[str], rows: list[dict]) -> Path:
    """CSV of ``rows`` with numbers at 17 significant digits."""

    def cell(value):
        if value is None:
            return ""
        if isinstance(value, float):
            return f"{value:.17g}"
        return str(value)

    lines = [",".join(columns)] + [",".join(cell(row.get(c)) for c in columns) for row in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_solution(path: Path, grid: Grid, columns: dict[str, np.ndarray]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    write_grid_csv(path, grid, columns)
    return path


def sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _version(package: str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def platform_details() -> dict:
    return {
        "os": platform.system(),
        "os_version": platform.release(),
        "architecture": platform.machine(),
        "python_version": platform.python_version(),
        "logical_cores": psutil.cpu_count(logical=True),
        "memory_total": psutil.virtual_memory().total,
        "numpy": np.__version__,
        "scipy": _version("scipy"),
        "sympy": _version("sympy"),
    }


def input_files(config: RunConfig) -> list[Path]:
    """The problem file and every CSV table it references."""
    files = [config.problem]
    try:
        problem = load_config(config.problem)
    except ConfigError:
        return files
    sources = [*problem.exponents.values(), *problem.coefficients.values(), *problem.fields.values(), problem.source, problem.manufactured]
    files += sorted({s.table for s in sources if s is not None and s.table is not None})
    return files


def write_manifest(config: RunConfig, outputs: list[Path]) -> Path:
    """Input hashes and platform facts, kept apart from the reports so that reports stay comparable across runs."""
    manifest = {
        "command": config.command,
        "tool_version": _version("varexp-toolkit"),
        "inputs": {str(p): sha256(p) for p in input_files(config) if p.exists()},
        "outputs": sorted(p.name for p in outputs),
        "options": {
            "eta": config.eta,
            "p1": config.p1,
            "analysis_dimension": config.analysis_dimension,
            "nodes": config.nodes,
            "seed": config.seed,
            "tolerance": config.tolerance,
            "samples": config.samples,
            "force": config.force,
        },
        "platform": platform_details(),
    }
    path = write_json(config.out / "manifest.json", manifest)
    logger.debug("wrote manifest %s", path)
    return path
