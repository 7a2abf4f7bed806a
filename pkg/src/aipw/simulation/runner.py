"""Monte Carlo driver for the correctness grid.

Repeat r of every cell draws its data from the generator keyed by
``(seed, r)``, so all cells and methods see the same datasets, and its
bootstrap from ``(seed, r, 1)``. Repeats run as independent joblib jobs;
the report is identical for any worker count.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import joblib
import numpy as np
import pandas as pd

from aipw.inference import bootstrap
from aipw.longitudinal_data import LongitudinalDataset
from aipw.models import BootstrapPlan, ScenarioCell, ScenarioConfig
from aipw.pipeline import MethodPipeline, MethodPlan
from aipw.shared.errors import AipwError
from aipw.shared.protocols import NoOpReporter, ProgressReporter
from aipw.shared.seeding import child_rng, child_seed

from .generator import apply_dropout, generate_full, true_values_oracle
from .metrics import MetricsReport, empty_row, metrics
from .scenarios import cell_plan

logger = logging.getLogger(__name__)

RAW_COLUMNS = ("cell", "repeat", "method", "estimand", "estimate", "se", "failure")
EXCLUDED = "excluded_large_se"


@dataclass(frozen=True, slots=True)
class ScenarioResult:
    """Metrics and raw per-repeat estimates of a scenario run."""

    report: MetricsReport
    raw: pd.DataFrame


def _method_records(
    cfg: ScenarioConfig,
    plan: MethodPlan,
    method: str,
    ds: LongitudinalDataset,
    boot_seed: int,
    repeat: int,
) -> list[dict[str, object]]:
    pipeline = MethodPipeline(method, plan)
    failure = ""
    estimates = dict.fromkeys(plan.estimands, math.nan)
    ses = dict.fromkeys(plan.estimands, math.nan)
    try:
        estimates = pipeline(ds)
        boot = BootstrapPlan(replicates=cfg.bootstrap, seed=boot_seed, threads=1)
        result = bootstrap(ds, boot, pipeline)
        ses = {name: result.standard_error(name) for name in plan.estimands}
    except AipwError as exc:
        failure = exc.code
        logger.info("Repeat %d, %s failed: %s", repeat, method, exc.message)
    limit = cfg.max_standard_error
    if not failure and limit is not None and any(se > limit for se in ses.values()):
        failure = EXCLUDED
    return [
        {
            "repeat": repeat,
            "method": method,
            "estimand": name,
            "estimate": math.nan if failure else estimates[name],
            "se": math.nan if failure else ses[name],
            "failure": failure,
        }
        for name in plan.estimands
    ]


def _run_repeat(cfg: ScenarioConfig, plan: MethodPlan, repeat: int) -> list[dict[str, object]]:
    rng = child_rng(cfg.seed, repeat)
    full = generate_full(cfg.generator, rng)
    ds = apply_dropout(full.dataset, cfg.mechanism(), rng)
    boot_seed = child_seed(cfg.seed, repeat, 1)
    records: list[dict[str, object]] = []
    for method in cfg.methods:
        records.extend(_method_records(cfg, plan, method, ds, boot_seed, repeat))
    return records


def run_scenario(
    cfg: ScenarioConfig,
    cell: ScenarioCell,
    *,
    reporter: ProgressReporter | None = None,
) -> ScenarioResult:
    """Run every method on ``cfg.repeats`` datasets and score them.

    Per-method failures (fit errors, bootstrap refusals, large-SE
    exclusions) are recorded and counted, never fatal.
    """
    reporter = reporter or NoOpReporter()
    plan = cell_plan(cell, estimands=cfg.estimands, pi_covariate=cfg.pi_covariate)
    truth = true_values_oracle(cfg.generator, cfg.oracle_subjects)
    step = f"scenario {cell.label} ({cfg.repeats} repeats)"
    reporter.step_start(step)
    batches = joblib.Parallel(n_jobs=cfg.threads)(
        joblib.delayed(_run_repeat)(cfg, plan, repeat) for repeat in range(1, cfg.repeats + 1)
    )
    reporter.step_end(step)

    raw = pd.DataFrame.from_records(
        [{"cell": cell.label, **record} for batch in batches for record in batch],
        columns=list(RAW_COLUMNS),
    )
    rows = []
    for method in cfg.methods:
        for estimand in cfg.estimands:
            subset = raw[(raw["method"] == method) & (raw["estimand"] == estimand)]
            ok = np.isfinite(subset["estimate"].to_numpy()) & np.isfinite(
                subset["se"].to_numpy()
            )
            failures = int((~ok).sum())
            if not ok.any():
                rows.append(empty_row(cell.label, method, estimand, truth[estimand], failures))
                continue
            rows.append(
                metrics(
                    subset["estimate"].to_numpy()[ok],
                    subset["se"].to_numpy()[ok],
                    truth[estimand],
                    alpha=cfg.alpha,
                    method=method,
                    estimand=estimand,
                    cell=cell.label,
                    failures=failures,
                )
            )
    for row in rows:
        if row.flags:
            logger.warning(
                "Scenario %s, %s/%s flagged: %s (%d failures)",
                cell.label,
                row.method,
                row.estimand,
                ", ".join(row.flags),
                row.failures,
            )
    logger.info("Scenario %s finished", cell.label)
    return ScenarioResult(report=MetricsReport(rows=tuple(rows)), raw=raw)


def run_grid(
    cfg: ScenarioConfig, *, reporter: ProgressReporter | None = None
) -> ScenarioResult:
    """Every configured cell, concatenated in configuration order."""
    results = [run_scenario(cfg, cell, reporter=reporter) for cell in cfg.cells]
    return ScenarioResult(
        report=MetricsReport.combine([r.report for r in results]),
        raw=pd.concat([r.raw for r in results], ignore_index=True),
    )
