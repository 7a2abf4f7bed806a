"""Two-arm trial report: coefficients and per-visit arm differences per method."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import pandas as pd

from aipw.inference import bootstrap, normal_ci
from aipw.longitudinal_data import LongitudinalDataset, available_case_difference, validate_monotone
from aipw.models import BootstrapPlan
from aipw.shared.constants import METHOD_AIPW_I, METHOD_AIPW_S, METHOD_GEE
from aipw.shared.errors import ModelSpecificationError
from aipw.shared.protocols import ProgressReporter

from .methods import MethodPipeline, MethodPlan, lsmean_estimand, run_method

logger = logging.getLogger(__name__)

TRIAL_METHODS = (METHOD_GEE, METHOD_AIPW_I, METHOD_AIPW_S)
REPORT_COLUMNS = ("method", "estimand", "estimate", "se", "lower", "upper")
AVAILABLE_CASE = "available-case"


def analyze_trial(
    ds: LongitudinalDataset,
    plan: MethodPlan,
    boot: BootstrapPlan,
    *,
    methods: Sequence[str] = TRIAL_METHODS,
    level: float = 0.95,
    reporter: ProgressReporter | None = None,
) -> pd.DataFrame:
    """Estimates with bootstrap SEs and normal intervals for each method.

    The unadjusted observed-mean arm difference at every follow-up visit
    is appended as reference rows without standard errors.

    Raises:
        ModelSpecificationError: The plan names no arm.
        BootstrapFailureError: Too many replicates failed for some method.
    """
    if plan.arm is None:
        msg = "trial analysis needs an arm covariate"
        raise ModelSpecificationError(msg)
    rows: list[dict[str, object]] = []
    for method in methods:
        estimates = run_method(method, ds, plan).estimates
        result = bootstrap(ds, boot, MethodPipeline(method, plan), reporter=reporter)
        for name, point in estimates.items():
            interval = normal_ci(point, result.standard_error(name), level)
            rows.append(
                {
                    "method": method,
                    "estimand": name,
                    "estimate": point,
                    "se": interval.se,
                    "lower": interval.lower,
                    "upper": interval.upper,
                }
            )
        logger.info("Trial analysis: %s done", method)

    reference = available_case_difference(ds, validate_monotone(ds), plan.arm)
    for record in reference.itertuples(index=False):
        if record.visit == 1:
            continue
        rows.append(
            {
                "method": AVAILABLE_CASE,
                "estimand": lsmean_estimand(float(record.time)),
                "estimate": float(record.difference),
                "se": math.nan,
                "lower": math.nan,
                "upper": math.nan,
            }
        )
    return pd.DataFrame.from_records(rows, columns=list(REPORT_COLUMNS))
