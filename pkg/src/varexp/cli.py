"""Command-line interface for the varexp toolkit."""

import argparse
import logging
import sys
import traceback
from typing import Optional

from .core.errors import VarexpError
from .tools import TOOL_DEFINITIONS
from .tools.artifacts import COMMANDS, EXIT_CONFIG, RunConfig, exit_code_for
from .tools.batch_tools import RUNNERS, outcomes_text, run_batch
from .tools.state import state

logger = logging.getLogger(__name__)


def list_tools() -> None:
    """Print the tool definitions the server exposes."""
    print("\nAvailable tools:")
    for tool in sorted(TOOL_DEFINITIONS, key=lambda x: x["name"]):
        print(f"\n{tool['name']}:")
        print(f"  Description: {tool['description']}")
        print("  Arguments:")
        schema = tool["inputSchema"]
        for prop_name, prop_info in schema["properties"].items():
            req_str = "(required)" if prop_name in schema.get("required", []) else "(optional)"
            desc = prop_info.get("description", "No description available")
            print(f"    {prop_name} {req_str}: {desc}")


def _arguments(args: argparse.Namespace, problem: str) -> dict:
    return {
        "problem": problem,
        "out": args.out,
        "eta": args.eta,
        "p1": args.p1,
        "analysis_dim": args.analysis_dim,
        "grid": args.grid,
        "seed": state.seed if args.seed is None else args.seed,
        "tolerance": state.tolerance if args.tolerance is None else args.tolerance,
        "samples": args.samples,
        "force": args.force,
    }


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varexp-cli",
        description="Hypothesis checks, reductions, norms and solves for variable-exponent elliptic problems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Check the hypotheses of a problem
  varexp-cli check --problem problems/main.toml --out runs/main

  # Solve, overriding eta and the grid
  varexp-cli solve --problem problems/main.toml --eta 0.1 --grid 129

  # Write the constant-exponent problem a main problem reduces to
  varexp-cli transform --problem problems/main.toml --p1 2 --out runs/reduced

  # Check several problems in parallel, one output directory each
  varexp-cli check --problem a.toml --problem b.toml --out runs

  # Enable debug output
  varexp-cli --debug study --problem problems/sine.toml

Exit codes: 0 pass/solved, 1 solver or check failure, 2 configuration error.""")
    parser.add_argument("--list-tools", action="store_true", help="List the tools the MCP server exposes")
    parser.add_argument("--verbose", action="store_true", help="Log one summary line per run")
    parser.add_argument("--debug", action="store_true", help="Log Newton steps, bracketing and partitions")
    parser.add_argument("command", nargs="?", choices=COMMANDS, help="What to run")
    parser.add_argument("--problem", action="append", default=[], help="Problem file (TOML or JSON); repeat to run a batch")
    parser.add_argument("--out", help=f"Output directory (default: {state.output_dir})")
    parser.add_argument("--eta", type=float, help="Partition width eta in (0, 1)")
    parser.add_argument("--p1", type=float, help="Constant exponent of the reduction, 2 <= p1 <= min p")
    parser.add_argument("--analysis-dim", type=int, help="Space dimension n used by the exponent formulas")
    parser.add_argument("--grid", type=int, help="Node count per axis")
    parser.add_argument("--seed", type=int, help="Seed of the sampled checks")
    parser.add_argument("--tolerance", type=float, help="Newton tolerance")
    parser.add_argument("--samples", type=int, default=1000, help="Samples per sampled condition")
    parser.add_argument("--force", action="store_true", help="Solve even when a hypothesis check fails")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)

    if args.list_tools:
        list_tools()
        return 0
    if not args.command or not args.problem:
        parser.print_help()
        return EXIT_CONFIG

    try:
        configs = [RunConfig.from_arguments(args.command, _arguments(args, problem)) for problem in args.problem]
        if len(configs) > 1:
            code, outcomes = run_batch(configs)
            print(outcomes_text(outcomes))
            return code
        result = RUNNERS[args.command](configs[0])
    except VarexpError as e:
        print(f"Error: {e}", file=sys.stderr)
        if args.debug:
            traceback.print_exc()
        return exit_code_for(e)
    print(result.to_text())
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
