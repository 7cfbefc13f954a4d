import logging
from typing import List

import numpy as np
from mcp.types import TextContent

from ..core.errors import ConfigError
from ..core.estimates import check_hypotheses
from ..core.solver import SolverConfig, refinement_study, solve
from .artifacts import EXIT_FAILURE, EXIT_OK, CommandResult, RunConfig, write_json, write_manifest, write_rows, write_solution
from .check_tools import RUN_OPTIONS

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "method", "residual", "step"]
CONVERGENCE_COLUMNS = ["nodes", "spacing", "error_w", "error_u", "order_w", "order_u", "iterations", "status"]


def solve_problem_tool():
    return {
        "name": "solve_problem",
        "description": "Solve a problem instance with a damped Newton iteration in the flux variable. "
                    "WHEN TO USE: When you need a discrete generalized solution of a main (variable exponent) or reduced "
                    "(constant exponent) problem, together with its weak residual and space-membership diagnostics. "
                    "Main problems are reduced first, solved, and mapped back. "
                    "WHEN NOT TO USE: When you only want to know whether the hypotheses hold (use check_problem). "
                    "RETURNS: A JSON report with the solver status, iteration count, residual history, weak residual, "
                    "membership diagnostics and the hypothesis verdict. solution.csv holds u, w and the error against a "
                    "manufactured solution when one is declared; trace.csv holds the iteration trace. When the problem file "
                    "declares [study] grids and a manufactured solution, refinement data is included as well. "
                    "If the hypotheses fail the solve is refused unless force is set.",
        "inputSchema": {
            "type": "object",
            "properties": {
                **RUN_OPTIONS,
                "tolerance": {
                    "type": "number",
                    "description": "Newton stops when the max-norm of the scaled residual is below this value.",
                    "default": 1e-10
                },
                "force": {
                    "type": "boolean",
                    "description": "Solve even when a hypothesis check fails.",
                    "default": False
                },
            },
            "required": ["problem"]
        },
    }


def refinement_study_tool():
    return {
        "name": "refinement_study",
        "description": "Measure the convergence order of the solver against a manufactured solution. "
                    "WHEN TO USE: To confirm that the discrete solution converges under grid refinement, for problems whose file "
                    "declares a [manufactured] solution and [study] grids. "
                    "WHEN NOT TO USE: For problems without a manufactured solution; there is nothing to measure errors against. "
                    "RETURNS: A convergence table (nodes, spacing, max errors in w and u, observed orders, iterations) as JSON "
                    "and as convergence.csv, with a flag telling whether the errors decrease monotonically.",
        "inputSchema": {
            "type": "object",
            "properties": {
                **{k: v for k, v in RUN_OPTIONS.items() if k != "grid"},
                "tolerance": {
                    "type": "number",
                    "description": "Newton tolerance used on every grid.",
                    "default": 1e-10
                },
            },
            "required": ["problem"]
        },
    }


def _convergence_rows(table) -> list[dict]:
    return [row.to_dict() for row in table.rows]


def run_solve(config: RunConfig) -> CommandResult:
    problem = config.problem_config()
    spec = problem.build()
    hypotheses = check_hypotheses(spec, config.samples, config.seed)
    failed = [e.condition_id for e in hypotheses.entries if not e.skipped and not e.passed]
    summary = {"pass": hypotheses.passed, "failed": failed}
    payload = {"command": "solve", "problem": spec.to_dict(), "hypotheses": summary}

    if not hypotheses.passed and not config.force:
        logger.warning("%s: hypotheses fail (%s); not solving without --force", spec.name, ", ".join(failed))
        payload["hypothesis_report"] = hypotheses.to_dict()
        outputs = [write_json(config.out / "report.json", payload)]
        outputs.append(write_manifest(config, outputs))
        return CommandResult(EXIT_FAILURE, payload, outputs)

    cfg = SolverConfig(tolerance=config.tolerance)
    report = solve(spec, cfg)
    report.hypotheses = summary
    payload["solve"] = report.to_dict()

    columns = {"u": report.u.values, "w": report.w.values}
    if report.v is not None:
        columns["v"] = report.v.values
    if spec.manufactured is not None:
        columns["exact"] = spec.manufactured.values
        columns["error"] = report.u.values - spec.manufactured.values
        payload["solve"]["max_error"] = float(np.max(np.abs(columns["error"])))

    outputs = [
        write_solution(config.out / "solution.csv", spec.grid, columns),
        write_rows(config.out / "trace.csv", TRACE_COLUMNS, report.trace),
    ]
    if problem.study_grids and spec.manufactured is not None:
        table = refinement_study(spec, problem.study_grids, cfg)
        payload["refinement"] = table.to_dict()
        outputs.append(write_rows(config.out / "convergence.csv", CONVERGENCE_COLUMNS, _convergence_rows(table)))
    outputs.insert(0, write_json(config.out / "report.json", payload))
    outputs.append(write_manifest(config, outputs))
    return CommandResult(EXIT_OK if report.converged else EXIT_FAILURE, payload, outputs)


def run_study(config: RunConfig) -> CommandResult:
    problem = config.problem_config()
    if not problem.study_grids:
        raise ConfigError(f"{problem.name}: [study] grids are required for a refinement study")
    spec = problem.build()
    table = refinement_study(spec, problem.study_grids, SolverConfig(tolerance=config.tolerance))
    payload = {"command": "study", "problem": spec.to_dict(), "refinement": table.to_dict()}
    outputs = [
        write_json(config.out / "report.json", payload),
        write_rows(config.out / "convergence.csv", CONVERGENCE_COLUMNS, _convergence_rows(table)),
    ]
    outputs.append(write_manifest(config, outputs))
    converged = all(row.status == "converged" for row in table.rows)
    return CommandResult(EXIT_OK if converged and table.monotone else EXIT_FAILURE, payload, outputs)


async def handle_solve_problem(arguments: dict) -> List[TextContent]:
    """Handle solving a problem."""
    result = run_solve(RunConfig.from_arguments("solve", arguments))
    return [TextContent(type="text", text=result.to_text())]


async def handle_refinement_study(arguments: dict) -> List[TextContent]:
    """Handle a grid refinement study."""
    result = run_study(RunConfig.from_arguments("study", arguments))
    return [TextContent(type="text", text=result.to_text())]
