"""Per-visit descriptive tables."""

from __future__ import annotations

import math
from typing import Final

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.models import SummaryStratum

from .dataset import LongitudinalDataset
from .profile import MissingnessProfile

ALL_SUBJECTS: Final = "all"
COMPLETERS: Final = "completers"
DROPOUTS: Final = "dropouts"

SUMMARY_COLUMNS: Final = ("stratum", "visit", "time", "n", "mean", "sd", "dropout_pct")


def _strata(
    ds: LongitudinalDataset, profile: MissingnessProfile, by: SummaryStratum
) -> list[tuple[str, npt.NDArray[np.bool_]]]:
    everyone = np.ones(ds.n_subjects, dtype=bool)
    if by is SummaryStratum.COMPLETION:
        return [(COMPLETERS, profile.completers), (DROPOUTS, ~profile.completers)]
    if by is SummaryStratum.GROUP and ds.groups is not None:
        labels = np.asarray(ds.groups)
        return [(label, labels == label) for label in sorted(set(ds.groups))]
    return [(ALL_SUBJECTS, everyone)]


def _moments(values: npt.NDArray[np.float64]) -> tuple[float, float]:
    n = values.shape[0]
    if n == 0:
        return math.nan, math.nan
    mean = float(values.sum() / n)
    if n < 2:  # noqa: PLR2004
        return mean, math.nan
    return mean, float(np.sqrt(np.sum((values - mean) ** 2) / (n - 1)))


def summarize(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    *,
    by: SummaryStratum = SummaryStratum.GROUP,
) -> pd.DataFrame:
    """Observed mean, SD, count and cumulative dropout per visit and stratum.

    Dropout % at visit j is ``100 * (1 - mean(R[:, j]))`` within the stratum.
    Empty strata yield rows with ``n = 0`` and NaN statistics.

    Args:
        ds: Dataset.
        profile: Its missingness profile.
        by: Row grouping (``GROUP`` falls back to all subjects without labels).

    Returns:
        A frame with columns ``stratum, visit, time, n, mean, sd, dropout_pct``.
    """
    records: list[dict[str, object]] = []
    for label, members in _strata(ds, profile, by):
        size = int(members.sum())
        for column in range(ds.n_visits):
            seen = members & (profile.observed[:, column] == 1)
            mean, sd = _moments(ds.outcomes[seen, column])
            n_seen = int(seen.sum())
            records.append(
                {
                    "stratum": label,
                    "visit": column + 1,
                    "time": float(ds.time_codes[column]),
                    "n": n_seen,
                    "mean": mean,
                    "sd": sd,
                    "dropout_pct": 100.0 * (1.0 - n_seen / size) if size else math.nan,
                }
            )
    return pd.DataFrame.from_records(records, columns=list(SUMMARY_COLUMNS))


def available_case_difference(
    ds: LongitudinalDataset, profile: MissingnessProfile, arm: str
) -> pd.DataFrame:
    """Unadjusted observed-mean difference (arm = 1 minus arm = 0) per visit.

    Returns:
        A frame with columns ``visit, time, difference``.
    """
    treated = ds.covariate(arm) == 1.0
    rows: list[dict[str, object]] = []
    for column in range(ds.n_visits):
        seen = profile.observed[:, column] == 1
        active, _ = _moments(ds.outcomes[seen & treated, column])
        control, _ = _moments(ds.outcomes[seen & ~treated, column])
        rows.append(
            {
                "visit": column + 1,
                "time": float(ds.time_codes[column]),
                "difference": active - control,
            }
        )
    return pd.DataFrame.from_records(rows, columns=["visit", "time", "difference"])
