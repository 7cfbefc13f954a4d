import logging
from typing import List

import numpy as np
from mcp.types import TextContent

from ..core.errors import ConfigError, DomainError
from ..core.exponent_field import ExponentField
from ..core.grid import GridFunction, QuadratureKind
from ..core.modular_spaces import embedding_check, luxemburg_norm, modular, sobolev_norm
from ..core.pn_space import PnIndex, pn_embedding_report, pn_seminorm
from ..core.problem import FieldSource
from .artifacts import EXIT_OK, CommandResult, RunConfig, write_json, write_manifest, write_rows
from .check_tools import RUN_OPTIONS

logger = logging.getLogger(__name__)

NORM_COLUMNS = ["norm_kind", "exponent_field_id", "value"]


def compute_norms_tool():
    return {
        "name": "compute_norms",
        "description": "Compute variable-exponent modulars and norms of a grid function. "
                    "WHEN TO USE: When you need the modular, the Luxemburg norm, the first-order Sobolev norm or pn-space "
                    "seminorms of the function declared in a problem file's [norms] section (or of its manufactured solution), "
                    "together with the compact embedding predicate into the growth exponent's space. "
                    "WHEN NOT TO USE: For norms of a computed solution (solve_problem reports those in its memberships). "
                    "RETURNS: A norm table with rows {norm_kind, exponent_field_id, value} as JSON and as norms.csv. "
                    "Norms are undefined for exponents with infinite nodes and are reported as unsupported.",
        "inputSchema": {
            "type": "object",
            "properties": {k: v for k, v in RUN_OPTIONS.items() if k not in ("eta", "p1", "seed")},
            "required": ["problem"]
        },
    }


def _norm_function(problem, grid) -> GridFunction:
    raw = problem.norms.get("function")
    if raw is not None:
        source = FieldSource.parse(raw, problem.base_dir, "norms.function")
    elif problem.manufactured is not None:
        source = problem.manufactured
    else:
        raise ConfigError(f"{problem.name}: [norms] function is required when no manufactured solution is declared")
    return GridFunction(grid, source.sample(grid))


def _norm_exponent(problem, grid) -> ExponentField:
    raw = problem.norms.get("exponent")
    if raw is not None:
        source, name = FieldSource.parse(raw, problem.base_dir, "norms.exponent"), "exponent"
    else:
        name = problem.kind.p_name
        if name not in problem.exponents:
            raise ConfigError(f"{problem.name}: [norms] exponent is required when exponents.{name} is absent")
        source = problem.exponents[name]
    return ExponentField.from_values(grid, source.sample(grid), name, expression=source.expression)


def _pn_indices(problem) -> list[PnIndex]:
    indices = []
    for entry in problem.norms.get("pn", []):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ConfigError(f"{problem.name}: norms.pn entries must be [alpha, beta] pairs, got {entry!r}")
        try:
            indices.append(PnIndex(float(entry[0]), float(entry[1])))
        except DomainError as e:
            raise ConfigError(f"{problem.name}: norms.pn: {e}") from e
    return indices


def _guarded(fn, *args):
    try:
        return fn(*args)
    except DomainError as e:
        logger.info("norm unsupported: %s", e)
        return "unsupported"


def norm_table(problem, nodes: tuple[int, ...] | None = None) -> dict:
    """Norm rows for the [norms] section of ``problem``, sampled without building the problem."""
    grid = problem.grid(nodes)
    u = _norm_function(problem, grid)
    p = _norm_exponent(problem, grid)
    rows = [
        {"norm_kind": "modular", "exponent_field_id": p.name, "value": modular(u, p)},
        {"norm_kind": "luxemburg", "exponent_field_id": p.name, "value": _guarded(luxemburg_norm, u, p)},
        {"norm_kind": "luxemburg_midpoint", "exponent_field_id": p.name, "value": _guarded(luxemburg_norm, u, p, None, QuadratureKind.MIDPOINT)},
        {"norm_kind": "sobolev", "exponent_field_id": p.name, "value": _guarded(sobolev_norm, u, p)},
    ]
    n = problem.analysis_dimension
    pn = []
    for idx in _pn_indices(problem):
        label = f"pn({idx.alpha:g},{idx.beta:g})"
        rows.append({"norm_kind": "pn_seminorm", "exponent_field_id": label, "value": pn_seminorm(u, idx)})
        pn.append({"index": idx.to_dict(), "seminorm": rows[-1]["value"], "embedding": pn_embedding_report(idx, n, p=p.minimum).to_dict()})

    table = {"grid": list(grid.nodes), "exponent": p.to_dict(), "rows": rows, "pn": pn}
    growth_name = problem.kind.growth_name
    if growth_name in problem.exponents and n >= 2:
        growth = problem.exponents[growth_name].sample(grid)
        if np.all(np.isfinite(growth)):
            table["embedding"] = {"target": growth_name, **embedding_check(1, p, growth, n).to_dict(grid)}
    return table


def run_norms(config: RunConfig) -> CommandResult:
    problem = config.problem_config()
    table = norm_table(problem)
    payload = {"command": "norms", "problem": problem.name, "norms": table}
    outputs = [
        write_json(config.out / "report.json", payload),
        write_rows(config.out / "norms.csv", NORM_COLUMNS, table["rows"]),
    ]
    outputs.append(write_manifest(config, outputs))
    logger.info("norms %s: %d row(s)", problem.name, len(table["rows"]))
    return CommandResult(EXIT_OK, payload, outputs)


async def handle_compute_norms(arguments: dict) -> List[TextContent]:
    """Handle computing norms of a grid function."""
    result = run_norms(RunConfig.from_arguments("norms", arguments))
    return [TextContent(type="text", text=result.to_text())]
