"""Command-line surface: subcommands, artifact writers and exit-code mapping."""

from .artifacts import DIST_NAME, ArtifactWriter, package_version, write_error
from .commands import (
    ESTIMATE_COLUMNS,
    cmd_estimate,
    cmd_impute,
    cmd_report,
    cmd_simulate,
    cmd_validate,
    load_run_config,
    load_scenario_config,
)
from .main import build_parser, main

__all__ = [
    "DIST_NAME",
    "ESTIMATE_COLUMNS",
    "ArtifactWriter",
    "build_parser",
    "cmd_estimate",
    "cmd_impute",
    "cmd_report",
    "cmd_simulate",
    "cmd_validate",
    "load_run_config",
    "load_scenario_config",
    "main",
    "package_version",
    "write_error",
]
