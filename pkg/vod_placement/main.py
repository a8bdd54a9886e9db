"""
Main CLI entry point for the VoD placement optimizer.
"""

import argparse
import logging
import sys
import uuid
from datetime import datetime

from vod_placement.config import VALID_DIALECTS, settings
from vod_placement.errors import ConfigError, ExitCode, VodPlacementError
from vod_placement.runner import (
    DEFAULT_PUE_GRID,
    SolveOptions,
    cmd_emit_mps,
    cmd_run,
    cmd_scenarios,
    cmd_sweep,
    cmd_verify,
)
from vod_placement.scenario import DATA_DIR, load_run_config

# -------------------------------------------------------------------
# Logging
# -------------------------------------------------------------------
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s %(levelname)s:%(name)s:%(message)s",
)
logger = logging.getLogger(__name__)

COMMANDS = ("run", "sweep-pue", "scenario-b", "scenario-c", "emit-mps", "verify")

# Shipped config used when --config is not given.
DEFAULT_CONFIGS = {
    "run": "scenario_b.cfg",
    "sweep-pue": "sweep.cfg",
    "scenario-b": "scenario_b.cfg",
    "scenario-c": "scenario_c.cfg",
    "emit-mps": "scenario_b.cfg",
    "verify": "scenario_b.cfg",
}


# -------------------------------------------------------------------
# CLI ENTRY POINT
# -------------------------------------------------------------------
def dispatch_cli(args) -> ExitCode:
    """Load the run config and hand over to the command."""
    if getattr(args, "verbose", False):
        logging.getLogger().setLevel(logging.DEBUG)

    config_path = args.config or str(DATA_DIR / DEFAULT_CONFIGS[args.command])
    options = SolveOptions(
        use_solver=not args.no_solver,
        solver_cmd=args.solver_cmd,
        time_limit_s=args.time_limit,
        dialect=args.dialect,
    )
    if args.time_limit is not None and args.time_limit <= 0:
        raise ConfigError("--time-limit must be positive")
    if args.command == "verify" and not args.plan:
        raise ConfigError("verify needs --plan <plan.csv>")

    run_id = uuid.uuid4().hex[:8]
    logger.info("[START] %s job %s at %s (config %s)", args.command, run_id, datetime.now(), config_path)

    setup = load_run_config(config_path)
    if args.command == "run":
        code = cmd_run(setup, args.out, options)
    elif args.command == "sweep-pue":
        code = cmd_sweep(setup, args.out, options, pue_mf_grid=args.pue_mf, pue_af_grid=args.pue_af)
    elif args.command == "scenario-b":
        code = cmd_scenarios(setup, args.out, options, include_esd=False)
    elif args.command == "scenario-c":
        code = cmd_scenarios(setup, args.out, options, include_esd=True)
    elif args.command == "emit-mps":
        code = cmd_emit_mps(setup, args.out)
    else:
        code = cmd_verify(setup, args.plan)

    logger.info("[FINISHED] %s job complete [run=%s, exit=%d]", args.command, run_id, int(code))
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Energy-aware VoD placement over cloud, metro-fog and access-fog tiers")

    parser.add_argument("command", choices=COMMANDS, help="Study or tool to run")
    parser.add_argument("--config", help="Run config file (defaults to the shipped config for the command)")
    parser.add_argument(
        "--solver-cmd",
        help="Solver command template with {mps}, {solution}, {time_limit} and {options} placeholders "
        "(defaults to VOD_SOLVER_CMD, then the dialect's template)",
    )
    parser.add_argument("--dialect", choices=sorted(VALID_DIALECTS), help="Solution-file dialect (default: auto)")
    parser.add_argument("--time-limit", type=float, help=f"Solver time limit in seconds (default {settings.time_limit_s:g})")
    parser.add_argument(
        "--no-solver",
        action="store_true",
        help="Use the greedy placement instead of an external MILP solver.",
    )
    parser.add_argument("--out", help=f"Output directory (default: {settings.output_dir})")
    parser.add_argument("--plan", help="Plan CSV to check (verify only)")
    parser.add_argument(
        "--pue-mf",
        type=float,
        nargs="+",
        default=list(DEFAULT_PUE_GRID),
        help="MFDC PUE grid for sweep-pue",
    )
    parser.add_argument(
        "--pue-af",
        type=float,
        nargs="+",
        default=list(DEFAULT_PUE_GRID),
        help="AFDC PUE grid for sweep-pue",
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


# -------------------------------------------------------------------
# __main__
# -------------------------------------------------------------------
def __main__():
    args = build_parser().parse_args()
    try:
        code = dispatch_cli(args)
    except VodPlacementError as e:
        logger.error("[ERROR] %s: %s", type(e).__name__, e)
        print(f"error: {e}")
        code = e.exit_code
    sys.exit(int(code))


def cli_entry():
    __main__()


if __name__ == "__main__":
    __main__()
