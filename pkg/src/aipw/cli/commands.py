"""Subcommand implementations.

Each command takes a validated configuration, runs the library pipeline
and writes its artifacts through ``ArtifactWriter``. Errors propagate to
``cli.main``, which maps them to exit codes.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from aipw.config.settings import get_settings
from aipw.dropout_weights import weights_frame
from aipw.estimators import GeeFit
from aipw.imputers import CompletedDataset, compare_completed
from aipw.inference import bootstrap, normal_ci
from aipw.longitudinal_data import (
    LongitudinalDataset,
    fill_intermediate_gaps,
    find_nonmonotone_subjects,
    ingest_completed_csv,
    ingest_long_csv,
    intermittent_gaps,
    summarize,
    to_long_frame,
    validate_monotone,
)
from aipw.models import (
    BootstrapPlan,
    Construct,
    RunConfig,
    ScenarioConfig,
    SummaryStratum,
    TrialConfig,
)
from aipw.pipeline import (
    TRIAL_METHODS,
    MethodPipeline,
    MethodPlan,
    MethodResult,
    analyze_trial,
    estimate_completed,
    impute,
    model_standard_errors,
    run_method,
)
from aipw.shared.constants import PROVENANCE_GAP_FILL
from aipw.shared.errors import ModelSpecificationError
from aipw.shared.protocols import LoggingReporter
from aipw.shared.seeding import child_rng
from aipw.simulation import cell_plan, generate_trial, run_grid, trial_plan, trial_truth

from .artifacts import ArtifactWriter, echo

logger = logging.getLogger(__name__)

ESTIMATE_COLUMNS = ("estimand", "estimate", "se", "lower", "upper", "se_source")


# ---------------------------------------------------------------------------
# Configuration loading
# ---------------------------------------------------------------------------


def _read_json(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    with path.open(encoding="utf-8") as handle:
        payload = json.load(handle)
    if not isinstance(payload, dict):
        msg = f"{path} must hold a JSON object"
        raise ModelSpecificationError(msg, {"config": str(path)})
    return payload


def _overrides(**flags: Any) -> dict[str, Any]:  # noqa: ANN401
    return {key: value for key, value in flags.items() if value is not None}


def load_run_config(
    config: Path | None,
    *,
    input_path: Path | None = None,
    method: str | None = None,
    replicates: int | None = None,
    seed: int | None = None,
    threads: int | None = None,
    fill_gaps: bool = False,
    output: Path | None = None,
) -> RunConfig:
    """Merge a JSON run config with command-line flags (flags win).

    Raises:
        pydantic.ValidationError: The merged configuration is invalid.
    """
    payload = _read_json(config)
    payload.setdefault("threads", get_settings().threads)
    payload.update(
        _overrides(
            input=input_path,
            method=method,
            bootstrap=replicates,
            seed=seed,
            threads=threads,
            output=output,
        )
    )
    if fill_gaps:
        payload["fill_gaps"] = True
    return RunConfig.model_validate(payload)


def load_scenario_config(
    config: Path | None,
    *,
    construct: Construct | None = None,
    method: str | None = None,
    replicates: int | None = None,
    seed: int | None = None,
    threads: int | None = None,
) -> ScenarioConfig:
    """Merge a JSON scenario config with command-line flags (flags win)."""
    payload = _read_json(config)
    payload.update(
        _overrides(
            construct=construct,
            bootstrap=replicates,
            seed=seed,
            threads=threads,
            methods=(method,) if method is not None else None,
        )
    )
    return ScenarioConfig.model_validate(payload)


def _hash_payload(cfg: RunConfig | ScenarioConfig) -> dict[str, Any]:
    """Configuration as hashed into metadata; worker count and paths excluded."""
    return cfg.model_dump(mode="json", by_alias=True, exclude={"threads", "output"})


# ---------------------------------------------------------------------------
# Shared steps
# ---------------------------------------------------------------------------


def _require_input(cfg: RunConfig) -> Path:
    if cfg.input is None:
        msg = "no input CSV (use --input or the 'input' config key)"
        raise ModelSpecificationError(msg)
    return cfg.input


def _prepare(raw: LongitudinalDataset, cfg: RunConfig) -> LongitudinalDataset:
    """Fill intermittent gaps when requested; the DR machinery then sees a monotone panel."""
    if not cfg.fill_gaps:
        return raw
    filled = fill_intermediate_gaps(raw, cfg.sequential_design())
    logger.info("Filled %d intermittent gap(s)", int(intermittent_gaps(raw).sum()))
    return filled


def _switches(plan: MethodPlan, ds: LongitudinalDataset, cfg: RunConfig) -> dict[str, Any]:
    return {
        **plan.switches(),
        "method": cfg.method,
        "fill_gaps": cfg.fill_gaps,
        "time_codes": [float(t) for t in ds.time_codes],
        "bootstrap": cfg.bootstrap,
        "alpha": cfg.alpha,
    }


def _boot_plan(cfg: RunConfig, replicates: int, method: str) -> BootstrapPlan:
    return BootstrapPlan(
        replicates=replicates,
        seed=cfg.seed,
        max_failure_fraction=get_settings().bootstrap_max_failure_fraction,
        threads=cfg.threads,
        pipeline=method,
    )


def _estimate_rows(
    estimates: dict[str, float], ses: dict[str, float], level: float, source: str
) -> pd.DataFrame:
    rows: list[dict[str, object]] = []
    for name, point in estimates.items():
        se = ses.get(name, math.nan)
        lower = upper = math.nan
        if math.isfinite(point) and math.isfinite(se):
            interval = normal_ci(point, se, level)
            lower, upper = interval.lower, interval.upper
        rows.append(
            {
                "estimand": name,
                "estimate": point,
                "se": se,
                "lower": lower,
                "upper": upper,
                "se_source": source if math.isfinite(se) else "",
            }
        )
    return pd.DataFrame.from_records(rows, columns=list(ESTIMATE_COLUMNS))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(cfg: RunConfig) -> None:
    """Check the input panel and write per-visit summaries.

    Raises:
        NonMonotoneError: Intermittent gaps without ``--fill-gaps``.
    """
    raw = ingest_long_csv(_require_input(cfg), cfg.columns)
    offenders = find_nonmonotone_subjects(raw)
    ds = _prepare(raw, cfg)
    profile = validate_monotone(ds)

    writer = ArtifactWriter(cfg.output, "validate", cfg.seed, _hash_payload(cfg))
    by_group = summarize(ds, profile, by=SummaryStratum.GROUP)
    writer.table("summary.csv", by_group)
    writer.table("summary_by_completion.csv", summarize(ds, profile, by=SummaryStratum.COMPLETION))
    writer.finish(
        {
            "fill_gaps": cfg.fill_gaps,
            "time_codes": [float(t) for t in ds.time_codes],
            "nonmonotone_subjects": len(offenders),
        }
    )
    completers = int(profile.completers.sum())
    echo(
        f"{ds.n_subjects} subjects, {ds.n_visits} visits, {completers} completers, "
        f"{len(offenders)} subject(s) with intermittent gaps"
    )
    echo(by_group.to_string(index=False))


def cmd_impute(cfg: RunConfig) -> None:
    """Write the completed data, model diagnostics and the observed-vs-completed table.

    Raises:
        ModelSpecificationError: The method does not impute.
        DataValidationError: The panel fails validation.
        EstimationError: A working model failed.
    """
    raw = ingest_long_csv(_require_input(cfg), cfg.columns)
    ds = _prepare(raw, cfg)
    plan = MethodPlan.from_run_config(cfg, ())
    result = impute(cfg.method, ds, plan)
    completed = result.completed
    if completed is None:
        msg = f"{cfg.method} produced no completed data"
        raise ModelSpecificationError(msg)
    provenance = np.where(intermittent_gaps(raw), PROVENANCE_GAP_FILL, completed.provenance)

    writer = ArtifactWriter(cfg.output, "impute", cfg.seed, _hash_payload(cfg))
    writer.table(
        "completed.csv",
        to_long_frame(ds, cfg.columns, values=completed.values, provenance=provenance),
    )
    comparison = compare_completed(ds, completed)
    writer.table("comparison.csv", comparison)
    if result.weights is not None:
        writer.table("weights.csv", weights_frame(result.weights, result.profile))
    if result.hazards is not None:
        writer.table("hazard_models.csv", result.hazards.coefficients_frame())
    if result.sequential is not None:
        writer.table("sequential_models.csv", result.sequential.coefficients_frame())
    writer.finish({**_switches(plan, ds, cfg), "fingerprints": dict(completed.fingerprints)})
    echo(comparison.to_string(index=False))


def _estimate_raw(
    cfg: RunConfig, ds: LongitudinalDataset, plan: MethodPlan, writer: ArtifactWriter
) -> tuple[MethodResult, dict[str, float], str]:
    result = run_method(cfg.method, ds, plan)
    if cfg.bootstrap is None:
        source = "robust" if isinstance(result.fit, GeeFit) else "model"
        return result, model_standard_errors(result, ds, plan), source
    boot = bootstrap(
        ds,
        _boot_plan(cfg, cfg.bootstrap, cfg.method),
        MethodPipeline(cfg.method, plan),
        reporter=LoggingReporter(),
    )
    writer.table("bootstrap_replicates.csv", boot.replicate_frame())
    ses = {name: boot.standard_error(name) for name in plan.estimands}
    return result, ses, "bootstrap"


def cmd_estimate(cfg: RunConfig) -> None:
    """Write the estimate table and the fit summary.

    A CSV with a ``provenance`` column is analysed as completed data (no
    re-imputation); anything else runs ``cfg.method`` on the raw panel.

    Raises:
        ModelSpecificationError: ``--bootstrap`` with completed input.
    """
    ds, provenance = ingest_completed_csv(_require_input(cfg), cfg.columns)
    plan = MethodPlan.from_run_config(cfg, cfg.estimand_names())
    writer = ArtifactWriter(cfg.output, "estimate", cfg.seed, _hash_payload(cfg))
    if provenance is not None:
        if cfg.bootstrap is not None:
            msg = "bootstrap needs the raw panel; run estimate on the raw CSV with --method"
            raise ModelSpecificationError(msg)
        completed = CompletedDataset.from_provenance(ds, provenance)
        result = estimate_completed(completed, plan)
        ses = model_standard_errors(result, completed.source, plan)
        source = "robust"
        switches = {**_switches(plan, ds, cfg), "method": completed.method, "input": "completed"}
    else:
        ds = _prepare(ds, cfg)
        result, ses, source = _estimate_raw(cfg, ds, plan, writer)
        switches = {**_switches(plan, ds, cfg), "input": "raw"}

    table = _estimate_rows(result.estimates, ses, 1.0 - cfg.alpha, source)
    writer.table("estimates.csv", table)
    if result.fit is not None:
        writer.table("fit_summary.csv", result.fit.summary_frame())
    writer.finish(switches)
    echo(table.to_string(index=False))


def cmd_simulate(cfg: ScenarioConfig, out_dir: Path) -> None:
    """Run the scenario grid and write the metrics and raw per-repeat estimates."""
    result = run_grid(cfg, reporter=LoggingReporter())
    writer = ArtifactWriter(out_dir, "simulate", cfg.seed, _hash_payload(cfg))
    metrics = result.report.to_frame()
    writer.table("metrics.csv", metrics)
    writer.table("raw_estimates.csv", result.raw)
    plan = cell_plan(cfg.cells[0], estimands=cfg.estimands, pi_covariate=cfg.pi_covariate)
    writer.finish(
        {
            **plan.switches(),
            "construct": str(cfg.mechanism().construct_kind),
            "cells": [cell.label for cell in cfg.cells],
            "repeats": cfg.repeats,
            "bootstrap": cfg.bootstrap,
            "max_standard_error": cfg.max_standard_error,
            "time_codes": list(cfg.generator.time_codes),
        }
    )
    echo(metrics.to_string(index=False))


def cmd_report(cfg: RunConfig, methods: tuple[str, ...] = TRIAL_METHODS) -> None:
    """Two-arm trial report with bootstrap intervals.

    Without ``--input`` a synthetic trial is drawn from the default
    ``TrialConfig`` with the master seed, and its generator truth is
    written alongside.

    Raises:
        ModelSpecificationError: A supplied CSV run names no arm.
    """
    writer = ArtifactWriter(cfg.output, "report", cfg.seed, _hash_payload(cfg))
    if cfg.input is None:
        trial = TrialConfig()
        ds = generate_trial(trial, child_rng(cfg.seed, 0))
        plan = trial_plan(trial)
        truth = pd.DataFrame(list(trial_truth(trial).items()), columns=["estimand", "truth"])
        writer.table("trial_data.csv", to_long_frame(ds))
        writer.table("truth.csv", truth)
    else:
        ds = _prepare(ingest_long_csv(cfg.input, cfg.columns), cfg)
        plan = MethodPlan.from_run_config(cfg, cfg.estimand_names())

    replicates = cfg.bootstrap or get_settings().bootstrap_replicates
    report = analyze_trial(
        ds,
        plan,
        _boot_plan(cfg, replicates, "trial"),
        methods=methods,
        level=1.0 - cfg.alpha,
        reporter=LoggingReporter(),
    )
    writer.table("trial_report.csv", report)
    profile = validate_monotone(ds)
    writer.table("summary_by_completion.csv", summarize(ds, profile, by=SummaryStratum.COMPLETION))
    writer.finish(
        {
            **plan.switches(),
            "methods": list(methods),
            "bootstrap": replicates,
            "synthetic": cfg.input is None,
            "time_codes": [float(t) for t in ds.time_codes],
        }
    )
    echo(report.to_string(index=False))
