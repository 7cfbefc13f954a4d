import logging
from typing import List

from mcp.types import TextContent

from ..core.errors import ConfigError
from ..core.problem import write_problem
from ..core.transform import reduce_problem
from .artifacts import EXIT_OK, CommandResult, RunConfig, write_json, write_manifest
from .check_tools import RUN_OPTIONS


def transform_problem_tool():
    return {
        "name": "transform_problem",
        "description": "Reduce a variable-exponent problem to a constant-exponent one and write it as a problem file. "
                    "WHEN TO USE: When you want the constant-exponent problem in v = |u|^gamma u that a main problem is "
                    "equivalent to, for inspection, for checking its hypotheses, or for solving it directly. "
                    "WHEN NOT TO USE: On a reduced problem; it is already in constant-exponent form. "
                    "RETURNS: The path of the emitted JSON problem file (with CSV tables for every non-constant field), "
                    "the constant threshold separating omega1 after the reduction and whether it is consistent, and the "
                    "range of gamma. The emitted file can be passed back to any other tool.",
        "inputSchema": {
            "type": "object",
            "properties": {k: v for k, v in RUN_OPTIONS.items() if k != "seed"},
            "required": ["problem"]
        },
    }


def run_transform(config: RunConfig) -> CommandResult:
    spec = config.load()
    if not spec.is_main:
        raise ConfigError(f"{spec.name} is already a {spec.kind.value} problem; only main problems are reduced")
    reduced = reduce_problem(spec)
    emitted = write_problem(reduced, config.out, stem=reduced.name)
    gamma = reduced.gamma.values
    payload = {
        "command": "transform",
        "problem": spec.to_dict(),
        "reduced": reduced.to_dict(),
        "emitted": emitted.name,
        "threshold": reduced.provenance["threshold"],
        "gamma": {"min": float(gamma.min()), "max": float(gamma.max())},
    }
    outputs = [emitted, write_json(config.out / "report.json", payload)]
    outputs.append(write_manifest(config, outputs))
    return CommandResult(EXIT_OK, payload, outputs)


async def handle_transform_problem(arguments: dict) -> List[TextContent]:
    """Handle reducing a problem to constant exponent."""
    result = run_transform(RunConfig.from_arguments("transform", arguments))
    return [TextContent(type="text", text=result.to_text())]
