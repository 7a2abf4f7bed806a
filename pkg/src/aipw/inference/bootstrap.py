"""Nonparametric subject-level bootstrap of a whole analysis pipeline.

Each replicate resamples N subjects with replacement and reruns the
pipeline from scratch: hazard models, imputation models and the final
estimator are all refit. Replicate b draws from a generator keyed by
``(seed, b)``, so results do not depend on worker count or execution order.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import joblib
import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.longitudinal_data import LongitudinalDataset
from aipw.models import BootstrapPlan
from aipw.shared.errors import AipwError, BootstrapFailureError
from aipw.shared.protocols import NoOpReporter, ProgressReporter
from aipw.shared.seeding import child_rng

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

Pipeline = Callable[[LongitudinalDataset], Mapping[str, float]]
"""Maps a dataset to named point estimates."""

REPLICATE_COLUMNS = ("replicate", "param", "estimate")
NON_FINITE = "non_finite"


@dataclass(frozen=True, slots=True)
class _Outcome:
    replicate: int
    estimates: dict[str, float] | None
    failure: str | None


@dataclass(frozen=True, slots=True)
class BootstrapResult:
    """Replicate estimates and the standard errors they imply.

    Attributes:
        params: Parameter names in pipeline order.
        replicates: ``B × P`` estimates; failed replicates are NaN rows.
        se: Sample standard deviation over successful replicates.
        failures: Failure reason (error code) to replicate count.
        seed: Master seed of the run.
    """

    params: tuple[str, ...]
    replicates: FloatArray
    se: FloatArray
    failures: Mapping[str, int]
    seed: int

    @property
    def n_replicates(self) -> int:
        return int(self.replicates.shape[0])

    @property
    def n_failed(self) -> int:
        return sum(self.failures.values())

    def standard_error(self, param: str) -> float:
        """SE of one named parameter."""
        return float(self.se[self.params.index(param)])

    def replicate_frame(self) -> pd.DataFrame:
        """Long table ``replicate, param, estimate`` of successful replicates."""
        ok = np.all(np.isfinite(self.replicates), axis=1)
        rows = [
            {"replicate": b + 1, "param": param, "estimate": float(self.replicates[b, j])}
            for b in np.flatnonzero(ok)
            for j, param in enumerate(self.params)
        ]
        return pd.DataFrame.from_records(rows, columns=list(REPLICATE_COLUMNS))


def _run_replicate(
    ds: LongitudinalDataset, pipeline: Pipeline, seed: int, replicate: int
) -> _Outcome:
    rng = child_rng(seed, replicate)
    indices = rng.integers(0, ds.n_subjects, ds.n_subjects)
    try:
        estimates = {name: float(value) for name, value in pipeline(ds.take(indices)).items()}
    except AipwError as exc:
        return _Outcome(replicate=replicate, estimates=None, failure=exc.code)
    if not all(math.isfinite(value) for value in estimates.values()):
        return _Outcome(replicate=replicate, estimates=None, failure=NON_FINITE)
    return _Outcome(replicate=replicate, estimates=estimates, failure=None)


def bootstrap(
    ds: LongitudinalDataset,
    plan: BootstrapPlan,
    pipeline: Pipeline,
    *,
    reporter: ProgressReporter | None = None,
) -> BootstrapResult:
    """Rerun ``pipeline`` on ``plan.replicates`` resampled datasets.

    Args:
        ds: Original dataset.
        plan: Replicate count, master seed, failure tolerance and workers.
        pipeline: Full re-fit recipe returning named estimates.
        reporter: Progress sink.

    Returns:
        Replicate matrix, standard errors and failure accounting.

    Raises:
        BootstrapFailureError: More than ``plan.max_failure_fraction`` of the
            replicates failed, or fewer than two succeeded.
    """
    reporter = reporter or NoOpReporter()
    step = f"bootstrap ({plan.replicates} replicates)"
    reporter.step_start(step)
    outcomes: list[_Outcome] = joblib.Parallel(n_jobs=plan.threads)(
        joblib.delayed(_run_replicate)(ds, pipeline, plan.seed, b)
        for b in range(1, plan.replicates + 1)
    )
    reporter.step_end(step)

    failures = Counter(o.failure for o in outcomes if o.failure is not None)
    successes = [o for o in outcomes if o.estimates is not None]
    n_failed = sum(failures.values())
    if n_failed > plan.max_failure_fraction * plan.replicates or len(successes) < 2:
        msg = (
            f"{n_failed} of {plan.replicates} bootstrap replicates failed "
            f"(limit {plan.max_failure_fraction:.0%})"
        )
        raise BootstrapFailureError(
            msg, {"failures": dict(failures), "replicates": plan.replicates}
        )
    if n_failed:
        logger.warning("%d bootstrap replicate(s) failed: %s", n_failed, dict(failures))

    params = tuple(successes[0].estimates or {})
    matrix = np.full((plan.replicates, len(params)), np.nan)
    for outcome in successes:
        estimates = outcome.estimates or {}
        matrix[outcome.replicate - 1] = [estimates.get(p, np.nan) for p in params]
    ok = np.all(np.isfinite(matrix), axis=1)
    se = np.std(matrix[ok], axis=0, ddof=1)
    logger.info("Bootstrap finished: %d/%d replicates used", int(ok.sum()), plan.replicates)
    return BootstrapResult(
        params=params, replicates=matrix, se=se, failures=dict(failures), seed=plan.seed
    )
