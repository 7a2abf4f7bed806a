"""Unit tests for the subject-level bootstrap, normal intervals and the
interval score.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from aipw.inference import REPLICATE_COLUMNS, bootstrap, interval_score, normal_ci
from aipw.longitudinal_data import LongitudinalDataset
from aipw.models import BootstrapPlan
from aipw.pipeline import MethodPipeline
from aipw.shared.errors import BootstrapFailureError, EstimationError, ModelSpecificationError

from tests.conftest import SpyReporter, make_complete_panel, make_plan

Z_975 = 1.959963984540054


def _first_visit_mean(ds: LongitudinalDataset) -> dict[str, float]:
    """Mean outcome at visit 1."""
    return {"mean": float(ds.outcomes[:, 0].mean())}


def _always_fails(ds: LongitudinalDataset) -> dict[str, float]:
    """Pipeline whose fit never succeeds."""
    msg = f"no fit for {ds.n_subjects} subjects"
    raise EstimationError(msg)


def _not_finite(ds: LongitudinalDataset) -> dict[str, float]:
    """Pipeline returning NaN."""
    return {"mean": math.nan, "n": float(ds.n_subjects)}


def _fails_with_first_subject(ds: LongitudinalDataset) -> dict[str, float]:
    """Fails whenever subject s0001 was drawn."""
    if any(sid.startswith("s0001#") for sid in ds.subject_ids):
        msg = "first subject drawn"
        raise EstimationError(msg)
    return _first_visit_mean(ds)


# ── Intervals ─────────────────────────────────────────────────────────


class TestNormalCi:
    """Normal-theory intervals."""

    def test_standard_normal(self) -> None:
        """95% interval around 0 with SE 1 is ±1.959964."""
        interval = normal_ci(0.0, 1.0, 0.95)

        assert interval.lower == pytest.approx(-1.959964, abs=1e-6)
        assert interval.upper == pytest.approx(1.959964, abs=1e-6)

    def test_zero_se(self) -> None:
        """A zero SE gives a degenerate interval at the point."""
        interval = normal_ci(3.0, 0.0)

        assert interval.lower == interval.upper == 3.0

    @pytest.mark.parametrize("level", [0.0, 1.0, 1.5])
    def test_bad_level(self, level: float) -> None:
        """Levels outside (0, 1) are refused."""
        with pytest.raises(ModelSpecificationError, match="confidence level"):
            normal_ci(0.0, 1.0, level)

    def test_negative_se(self) -> None:
        """A negative SE is refused."""
        with pytest.raises(ModelSpecificationError, match="non-negative"):
            normal_ci(0.0, -1.0)

    @given(
        point=st.floats(min_value=-1e3, max_value=1e3, allow_nan=False),
        se=st.floats(min_value=0.0, max_value=1e2, allow_nan=False),
    )
    @settings(max_examples=100, deadline=None)
    def test_width_is_two_z_se(self, point: float, se: float) -> None:
        """Width equals 2 z se and the interval is centered on the point."""
        interval = normal_ci(point, se)

        assert interval.upper - interval.lower == pytest.approx(2 * Z_975 * se, abs=1e-9)
        assert (interval.upper + interval.lower) / 2 == pytest.approx(point, abs=1e-9)


class TestIntervalScore:
    """Width plus miss penalty."""

    def test_truth_inside(self) -> None:
        """Only the width counts when the interval covers."""
        assert interval_score(0.0, 1.0, 0.5, 0.05) == pytest.approx(1.0)

    def test_truth_above(self) -> None:
        """Missing by 0.5 at alpha 0.1 costs 20 * 0.5."""
        assert interval_score(0.0, 1.0, 1.5, 0.1) == pytest.approx(11.0)

    def test_truth_below(self) -> None:
        """The penalty is symmetric."""
        assert interval_score(0.0, 1.0, -0.5, 0.1) == pytest.approx(11.0)

    @given(
        lower=st.floats(min_value=-10, max_value=10),
        width=st.floats(min_value=0, max_value=10),
        truth=st.floats(min_value=-30, max_value=30),
    )
    @settings(max_examples=100, deadline=None)
    def test_never_below_width(self, lower: float, width: float, truth: float) -> None:
        """The score is at least the interval width."""
        assert interval_score(lower, lower + width, truth, 0.05) >= width - 1e-12


# ── Bootstrap ─────────────────────────────────────────────────────────


class TestBootstrap:
    """Subject-level resampling of a whole pipeline."""

    def test_se_of_a_mean(self) -> None:
        """The bootstrap SE of a mean is close to s / sqrt(n)."""
        ds = make_complete_panel(n=200)
        result = bootstrap(ds, BootstrapPlan(replicates=1000, seed=4), _first_visit_mean)
        expected = ds.outcomes[:, 0].std(ddof=1) / math.sqrt(200)

        assert result.standard_error("mean") == pytest.approx(expected, rel=0.10)
        assert result.n_failed == 0
        assert result.params == ("mean",)

    def test_same_seed_same_replicates(self) -> None:
        """Replicate b depends only on (seed, b)."""
        ds = make_complete_panel(n=50)
        plan = BootstrapPlan(replicates=20, seed=9)

        first = bootstrap(ds, plan, _first_visit_mean)
        second = bootstrap(ds, plan, _first_visit_mean)
        np.testing.assert_array_equal(first.replicates, second.replicates)
        other = bootstrap(ds, BootstrapPlan(replicates=20, seed=10), _first_visit_mean)
        assert not np.array_equal(first.replicates, other.replicates)

    def test_prefix_of_longer_run(self) -> None:
        """The first replicates of a longer run are the replicates of a shorter one."""
        ds = make_complete_panel(n=50)

        short = bootstrap(ds, BootstrapPlan(replicates=10, seed=2), _first_visit_mean)
        long = bootstrap(ds, BootstrapPlan(replicates=30, seed=2), _first_visit_mean)
        np.testing.assert_array_equal(long.replicates[:10], short.replicates)

    def test_all_failures_refused(self) -> None:
        """A pipeline that always fails cannot produce an SE."""
        ds = make_complete_panel(n=30)

        with pytest.raises(BootstrapFailureError) as exc_info:
            bootstrap(ds, BootstrapPlan(replicates=5), _always_fails)

        assert exc_info.value.details["failures"] == {"estimation": 5}

    def test_non_finite_estimates_count_as_failures(self) -> None:
        """NaN estimates are failures keyed ``non_finite``."""
        ds = make_complete_panel(n=30)

        with pytest.raises(BootstrapFailureError) as exc_info:
            bootstrap(ds, BootstrapPlan(replicates=4), _not_finite)

        assert exc_info.value.details["failures"] == {"non_finite": 4}

    def test_tolerated_failures(self) -> None:
        """Failed replicates are NaN rows and excluded from the SE and the table."""
        ds = make_complete_panel(n=20)
        plan = BootstrapPlan(replicates=60, seed=1, max_failure_fraction=1.0)
        result = bootstrap(ds, plan, _fails_with_first_subject)

        failed = np.isnan(result.replicates[:, 0])
        assert result.n_failed == int(failed.sum()) > 0
        assert result.failures == {"estimation": result.n_failed}
        frame = result.replicate_frame()
        assert list(frame.columns) == list(REPLICATE_COLUMNS)
        assert len(frame) == 60 - result.n_failed
        ok = result.replicates[~failed, 0]
        assert result.se[0] == pytest.approx(ok.std(ddof=1))

    def test_failures_above_limit(self) -> None:
        """The default 10% limit refuses the same run."""
        ds = make_complete_panel(n=20)

        with pytest.raises(BootstrapFailureError, match="bootstrap replicates failed"):
            bootstrap(ds, BootstrapPlan(replicates=60, seed=1), _fails_with_first_subject)

    def test_reporter_events(self, spy_reporter: SpyReporter) -> None:
        """One start and one end event per run."""
        ds = make_complete_panel(n=30)
        bootstrap(ds, BootstrapPlan(replicates=3), _first_visit_mean, reporter=spy_reporter)

        assert spy_reporter.events == [
            {"step": "bootstrap (3 replicates)", "status": "started"},
            {"step": "bootstrap (3 replicates)", "status": "completed"},
        ]

    @pytest.mark.slow
    def test_worker_count_does_not_change_results(self) -> None:
        """Parallel and serial runs give identical replicates."""
        ds = make_complete_panel(n=80)
        pipeline = MethodPipeline("gee", make_plan())

        serial = bootstrap(ds, BootstrapPlan(replicates=6, seed=3), pipeline)
        parallel = bootstrap(ds, BootstrapPlan(replicates=6, seed=3, threads=2), pipeline)
        np.testing.assert_array_equal(serial.replicates, parallel.replicates)
        assert serial.params == parallel.params
