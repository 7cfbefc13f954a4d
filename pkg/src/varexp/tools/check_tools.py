import logging
from typing import List

from mcp.types import TextContent

from ..core.estimates import check_hypotheses
from .artifacts import EXIT_FAILURE, EXIT_OK, CommandResult, RunConfig, write_json, write_manifest

logger = logging.getLogger(__name__)

RUN_OPTIONS = {
    "problem": {
        "type": "string",
        "description": "Path to a problem file (TOML or JSON). CSV tables it references are resolved relative to it."
    },
    "out": {
        "type": "string",
        "description": "Directory for report.json and manifest.json. Defaults to the persisted output directory."
    },
    "eta": {
        "type": "number",
        "description": "Partition width eta in (0, 1). Overrides the problem file."
    },
    "p1": {
        "type": "number",
        "description": "Constant exponent of the reduction for main problems, 2 <= p1 <= min p. Defaults to min p."
    },
    "analysis_dim": {
        "type": "integer",
        "description": "Space dimension n used by the exponent formulas (independent of the grid dimension)."
    },
    "grid": {
        "type": "integer",
        "description": "Node count per axis. Overrides the problem file."
    },
    "seed": {
        "type": "integer",
        "description": "Seed of the random samples drawn by the checks. Same seed, same report."
    },
}


def check_problem_tool():
    return {
        "name": "check_problem",
        "description": "Check every hypothesis of the existence theorem on a problem instance. "
                    "WHEN TO USE: Before solving a problem, to see whether its exponents, nonlinearity and coefficients satisfy "
                    "the growth condition, the sign conditions on omega2 and omega3, the coefficient integrability classes and "
                    "the structural exponent bounds. "
                    "WHEN NOT TO USE: When you need a solution (use solve_problem, which runs these checks first). "
                    "RETURNS: A JSON report with one entry per condition (pass flag, worst-case margin, witness node and tau), "
                    "the domain partition and its regime, and the overall verdict. Conditions that are vacuous for the regime "
                    "are marked as skipped. Growth and sign conditions are verified by sampling, not proven.",
        "inputSchema": {
            "type": "object",
            "properties": {
                **RUN_OPTIONS,
                "samples": {
                    "type": "integer",
                    "description": "Number of (node, tau) samples per sampled condition.",
                    "default": 1000
                },
            },
            "required": ["problem"]
        },
    }


def run_check(config: RunConfig) -> CommandResult:
    spec = config.load()
    report = check_hypotheses(spec, config.samples, config.seed)
    payload = {"command": "check", "problem": spec.to_dict(), "hypotheses": report.to_dict()}
    outputs = [write_json(config.out / "report.json", payload)]
    outputs.append(write_manifest(config, outputs))
    logger.info("check %s: %s", spec.name, "pass" if report.passed else "fail")
    return CommandResult(EXIT_OK if report.passed else EXIT_FAILURE, payload, outputs)


async def handle_check_problem(arguments: dict) -> List[TextContent]:
    """Handle checking the hypotheses of a problem."""
    result = run_check(RunConfig.from_arguments("check", arguments))
    return [TextContent(type="text", text=result.to_text())]
