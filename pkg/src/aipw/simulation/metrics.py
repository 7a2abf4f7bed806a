"""Monte Carlo performance metrics and the report that tabulates them."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.inference import interval_score, normal_ci
from aipw.models import MetricsRow
from aipw.shared.constants import FLAGGED_FAILURE_FRACTION
from aipw.shared.errors import DataValidationError

METRICS_COLUMNS = (
    "cell",
    "method",
    "estimand",
    "truth",
    "bias",
    "rmse",
    "ints",
    "covp",
    "mcsd",
    "avese",
    "repeats",
    "failures",
    "flags",
)

FLAG_FAILURES = "failures_above_threshold"
FLAG_COVERAGE_UNDEFINED = "covp_undefined"
FLAG_NO_REPEATS = "no_successful_repeats"


def metrics(
    estimates: npt.ArrayLike,
    ses: npt.ArrayLike,
    truth: float,
    *,
    alpha: float = 0.05,
    method: str = "",
    estimand: str = "",
    cell: str = "",
    failures: int = 0,
) -> MetricsRow:
    """Bias, RMSE, interval score, coverage, MC SD and mean SE over repeats.

    Coverage is undefined (NaN, flagged) when every standard error is zero;
    the MC SD is NaN for a single repeat.

    Raises:
        DataValidationError: No estimates, or mismatched lengths.
    """
    est = np.asarray(estimates, dtype=float)
    se = np.asarray(ses, dtype=float)
    if est.size == 0:
        msg = "metrics need at least one estimate"
        raise DataValidationError(msg)
    if est.shape != se.shape:
        msg = f"{est.size} estimates but {se.size} standard errors"
        raise DataValidationError(msg)

    r = est.shape[0]
    errors = est - truth
    intervals = [normal_ci(float(e), float(s), 1.0 - alpha) for e, s in zip(est, se, strict=True)]
    scores = [interval_score(ci.lower, ci.upper, truth, alpha) for ci in intervals]
    flags: list[str] = []
    if np.all(se == 0.0):
        covp = math.nan
        flags.append(FLAG_COVERAGE_UNDEFINED)
    else:
        covp = sum(ci.covers(truth) for ci in intervals) / r
    if failures > FLAGGED_FAILURE_FRACTION * (r + failures):
        flags.append(FLAG_FAILURES)
    return MetricsRow(
        cell=cell,
        method=method,
        estimand=estimand,
        truth=truth,
        bias=float(errors.mean()),
        rmse=math.sqrt(float(np.mean(errors**2))),
        ints=float(np.mean(scores)),
        covp=covp,
        mcsd=float(np.std(est, ddof=1)) if r > 1 else math.nan,
        avese=float(se.mean()),
        repeats=r,
        failures=failures,
        flags=tuple(flags),
    )


def empty_row(cell: str, method: str, estimand: str, truth: float, failures: int) -> MetricsRow:
    """Row for a method/estimand with no usable repeat."""
    return MetricsRow(
        cell=cell,
        method=method,
        estimand=estimand,
        truth=truth,
        bias=math.nan,
        rmse=math.nan,
        ints=math.nan,
        covp=math.nan,
        mcsd=math.nan,
        avese=math.nan,
        repeats=0,
        failures=failures,
        flags=(FLAG_NO_REPEATS, FLAG_FAILURES),
    )


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """Metrics rows for one or more scenario cells."""

    rows: tuple[MetricsRow, ...]

    def row(self, method: str, estimand: str, cell: str | None = None) -> MetricsRow:
        """The row of one method and estimand (optionally in one cell)."""
        for row in self.rows:
            if row.method == method and row.estimand == estimand and cell in (None, row.cell):
                return row
        msg = f"no metrics for {method}/{estimand}"
        raise KeyError(msg)

    def to_frame(self) -> pd.DataFrame:
        records = [
            {**row.model_dump(), "flags": ";".join(row.flags)} for row in self.rows
        ]
        return pd.DataFrame.from_records(records, columns=list(METRICS_COLUMNS))

    @classmethod
    def combine(cls, reports: Sequence[MetricsReport]) -> MetricsReport:
        return cls(rows=tuple(row for report in reports for row in report.rows))
