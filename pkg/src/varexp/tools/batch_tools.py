import asyncio
import dataclasses
import logging
from pathlib import Path
from typing import Callable, Dict, List

from mcp.types import TextContent

from ..core.errors import VarexpError
from .artifacts import COMMANDS, CommandResult, RunConfig, dumps, exit_code_for
from .check_tools import RUN_OPTIONS, run_check
from .norm_tools import run_norms
from .solve_tools import run_solve, run_study
from .transform_tools import run_transform

logger = logging.getLogger(__name__)

RUNNERS: Dict[str, Callable[[RunConfig], CommandResult]] = {
    "check": run_check,
    "solve": run_solve,
    "norms": run_norms,
    "transform": run_transform,
    "study": run_study,
}


def batch_problems_tool():
    return {
        "name": "batch_problems",
        "description": "Run one command on several problem files in parallel worker threads. "
                    "WHEN TO USE: When the same check, solve, norms, transform or study run is needed for a family of problem "
                    "files, for example a sweep over exponents or coefficients. "
                    "WHEN NOT TO USE: For a single problem file (call the command's own tool), or when one run needs the output "
                    "of another (for example solving an emitted reduced problem; run transform first, then solve). "
                    "RETURNS: One result per problem file, in the order given, each with its exit code and report. Every problem "
                    "writes into its own subdirectory of out named after the file. If a run raises an error, the error is "
                    "reported for that file and the other runs continue.",
        "inputSchema": {
            "type": "object",
            "properties": {
                "command": {
                    "type": "string",
                    "enum": list(COMMANDS),
                    "description": "The command to run on every problem file."
                },
                "problems": {
                    "type": "array",
                    "items": {"type": "string"},
                    "description": "Paths of the problem files."
                },
                **{k: v for k, v in RUN_OPTIONS.items() if k != "problem"},
                "tolerance": {
                    "type": "number",
                    "description": "Newton tolerance for solve and study runs.",
                    "default": 1e-10
                },
                "force": {
                    "type": "boolean",
                    "description": "Solve even when a hypothesis check fails.",
                    "default": False
                },
            },
            "required": ["command", "problems"]
        },
    }


def per_problem(configs: List[RunConfig]) -> List[RunConfig]:
    """Give every config its own output directory ``out/<problem stem>``."""
    return [dataclasses.replace(c, out=c.out / c.problem.stem) for c in configs]


def _execute(config: RunConfig, index: int) -> dict:
    """Run a single command with error handling."""
    try:
        result = RUNNERS[config.command](config)
        return {"index": index, "problem": str(config.problem), "exit_code": result.exit_code, "result": result}
    except VarexpError as e:
        logger.error("%s: %s", config.problem, e)
        return {"index": index, "problem": str(config.problem), "exit_code": exit_code_for(e), "error": str(e)}


async def run_configs(configs: List[RunConfig]) -> List[dict]:
    tasks = [asyncio.to_thread(_execute, config, idx) for idx, config in enumerate(configs)]
    return list(await asyncio.gather(*tasks))


def run_batch(configs: List[RunConfig]) -> tuple[int, List[dict]]:
    """Run ``configs`` in parallel; the exit code is the worst of the individual ones."""
    outcomes = asyncio.run(run_configs(per_problem(configs)))
    return max(o["exit_code"] for o in outcomes), outcomes


async def handle_batch_problems(arguments: dict) -> List[TextContent]:
    """Handle running one command over several problem files."""
    command = arguments.get("command")
    problems = arguments.get("problems", [])

    if command not in RUNNERS:
        raise ValueError(f"command must be one of {', '.join(COMMANDS)}")
    if not problems:
        raise ValueError("Problems list must not be empty")

    configs = [RunConfig.from_arguments(command, {**arguments, "problem": problem}) for problem in problems]
    outcomes = await run_configs(per_problem(configs))

    header = f"Batch Operation: {command} on {len(problems)} problem(s)\n"
    all_contents = [TextContent(type="text", text=header)]
    for outcome in outcomes:
        status = "ERROR" if "error" in outcome else f"EXIT {outcome['exit_code']}"
        section_header = f"[{outcome['index'] + 1}] {Path(outcome['problem']).name} - {status}\n"
        all_contents.append(TextContent(type="text", text=f"\n{section_header}{'=' * len(section_header)}\n"))
        if "error" in outcome:
            all_contents.append(TextContent(type="text", text=f"Error: {outcome['error']}"))
        else:
            all_contents.append(TextContent(type="text", text=outcome["result"].to_text()))
    return all_contents


def outcomes_text(outcomes: List[dict]) -> str:
    summary = []
    for outcome in outcomes:
        entry = {"problem": outcome["problem"], "exit_code": outcome["exit_code"]}
        if "error" in outcome:
            entry["error"] = outcome["error"]
        else:
            entry["artifacts"] = [str(p) for p in outcome["result"].artifacts]
        summary.append(entry)
    return dumps({"batch": summary})
