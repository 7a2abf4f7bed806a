"""
Command-line entry point: ``aipw <validate|impute|estimate|simulate|report>``.

Sets up logging from ``AIPW_LOG``, parses flags, dispatches to the
subcommand and converts domain errors into exit codes with a
machine-readable ``error.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from dotenv import load_dotenv
from pydantic import ValidationError

from aipw.config.settings import get_settings
from aipw.models import Construct, ErrorPayload
from aipw.shared.constants import SUPPORTED_METHODS
from aipw.shared.errors import EXIT_OK, EXIT_VALIDATION, AipwError

from .artifacts import DEFAULT_OUTPUT, write_error
from .commands import (
    cmd_estimate,
    cmd_impute,
    cmd_report,
    cmd_simulate,
    cmd_validate,
    load_run_config,
    load_scenario_config,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _configure_logging() -> None:
    # force=True replaces handlers a host process may have installed
    logging.basicConfig(level=get_settings().log.upper(), format=LOG_FORMAT, force=True)
    logging.getLogger("joblib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    """Subcommands share one set of flags; ``--construct`` only matters to ``simulate``."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", type=Path, help="long-format CSV (raw or completed)")
    common.add_argument("--config", type=Path, help="JSON run or scenario configuration")
    common.add_argument("--method", choices=SUPPORTED_METHODS, help="method identifier")
    common.add_argument("--bootstrap", type=int, metavar="B", help="bootstrap replicates")
    common.add_argument("--seed", type=int, help="master seed (0 <= seed < 2**64)")
    common.add_argument("--threads", type=int, help="parallel workers")
    common.add_argument(
        "--fill-gaps",
        action="store_true",
        help="fill intermittent gaps by sequential regression before analysis",
    )
    common.add_argument("--out", type=Path, help=f"output directory (default: {DEFAULT_OUTPUT})")

    parser = argparse.ArgumentParser(
        prog="aipw",
        description="Doubly-robust imputation and estimation for longitudinal data with dropout.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("validate", parents=[common], help="check a panel and summarize it")
    commands.add_parser("impute", parents=[common], help="write a completed dataset")
    commands.add_parser("estimate", parents=[common], help="estimate from raw or completed data")
    simulate = commands.add_parser("simulate", parents=[common], help="run the scenario grid")
    simulate.add_argument(
        "--construct",
        type=Construct,
        choices=[Construct.MODERATE, Construct.EXTREME],
        help="dropout construct",
    )
    commands.add_parser("report", parents=[common], help="two-arm trial report")
    return parser


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "simulate":
        scenario = load_scenario_config(
            args.config,
            construct=args.construct,
            method=args.method,
            replicates=args.bootstrap,
            seed=args.seed,
            threads=args.threads,
        )
        cmd_simulate(scenario, args.out or DEFAULT_OUTPUT)
        return

    cfg = load_run_config(
        args.config,
        input_path=args.input,
        method=args.method,
        replicates=args.bootstrap,
        seed=args.seed,
        threads=args.threads,
        fill_gaps=args.fill_gaps,
        output=args.out,
    )
    if args.command == "validate":
        cmd_validate(cfg)
    elif args.command == "impute":
        cmd_impute(cfg)
    elif args.command == "estimate":
        cmd_estimate(cfg)
    elif args.method is not None:
        cmd_report(cfg, (args.method,))
    else:
        cmd_report(cfg)


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    load_dotenv()
    _configure_logging()
    args = build_parser().parse_args(argv)
    out_dir = args.out or DEFAULT_OUTPUT

    try:
        _dispatch(args)
    except AipwError as exc:
        logger.exception("%s failed", args.command)
        payload = ErrorPayload(
            code=exc.code,
            category=exc.category,
            message=exc.message,
            details=exc.details,
            exit_code=exc.exit_code,
        )
    except ValidationError as exc:
        logger.exception("Invalid configuration")
        payload = ErrorPayload(
            code="config_validation",
            category="validation",
            message=f"{exc.error_count()} configuration error(s)",
            details={"errors": json.loads(exc.json(include_url=False))},
            exit_code=EXIT_VALIDATION,
        )
    except (OSError, json.JSONDecodeError) as exc:
        logger.exception("Could not read input")
        payload = ErrorPayload(
            code="io",
            category="validation",
            message=str(exc),
            exit_code=EXIT_VALIDATION,
        )
    else:
        return EXIT_OK

    write_error(out_dir, payload)
    return payload.exit_code


if __name__ == "__main__":
    sys.exit(main())
