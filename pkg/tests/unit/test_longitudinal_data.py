"""Unit tests for the longitudinal panel: construction, CSV ingestion,
monotone bookkeeping, gap filling and descriptive summaries.
"""

from __future__ import annotations

import io
import math

import numpy as np
import pytest
from aipw.longitudinal_data import (
    LongitudinalDataset,
    available_case_difference,
    fill_intermediate_gaps,
    ingest_completed_csv,
    ingest_long_csv,
    intermittent_gaps,
    summarize,
    to_long_frame,
    validate_monotone,
    write_csv,
)
from aipw.models import DatasetSchema, HistoryDesign, SummaryStratum
from aipw.shared.errors import (
    DataValidationError,
    DuplicateRowError,
    GapFillError,
    MissingBaselineError,
    NonMonotoneError,
    SchemaError,
)

from tests.conftest import make_complete_panel, make_tiny_panel

NAN = math.nan
SCHEMA = DatasetSchema(baseline=("x1",))


def _make_csv(*rows: str, header: str = "subject_id,visit,y,x1") -> io.StringIO:
    """Build an in-memory long-format CSV.

    Args:
        rows: Data lines without the header.
        header: Column header line.

    Returns:
        A readable text stream.
    """
    return io.StringIO("\n".join((header, *rows)) + "\n")


# ── Dataset construction ──────────────────────────────────────────────


class TestDatasetBuild:
    """Structural validation in ``LongitudinalDataset.build``."""

    def test_fully_observed(self) -> None:
        """A complete 3×3 panel has every cell observed."""
        ds = make_tiny_panel([[1, 2, 3], [2, 3, 4], [0, 1, 2]])

        assert ds.n_subjects == 3
        assert ds.n_visits == 3
        assert ds.observed.all()

    def test_missing_baseline_outcome(self) -> None:
        """A subject without a first-visit outcome is rejected and named."""
        with pytest.raises(MissingBaselineError) as exc_info:
            make_tiny_panel([[1, 2], [NAN, 3]])

        assert exc_info.value.details["subjects"] == ["s02"]

    def test_duplicate_ids(self) -> None:
        """Subject identifiers must be unique."""
        with pytest.raises(DataValidationError, match="unique"):
            LongitudinalDataset.build(("a", "a"), [[1, 2], [3, 4]], [0, 1])

    def test_time_codes_must_increase(self) -> None:
        """Non-increasing time codes are rejected."""
        with pytest.raises(DataValidationError, match="strictly increasing"):
            LongitudinalDataset.build(("a", "b"), [[1, 2], [3, 4]], [1, 1])

    def test_single_visit_rejected(self) -> None:
        """At least two visits are required."""
        with pytest.raises(DataValidationError, match="at least 2 visits"):
            LongitudinalDataset.build(("a",), [[1.0]], [0])

    def test_arrays_are_read_only(self) -> None:
        """Outcomes cannot be modified in place."""
        ds = make_tiny_panel([[1, 2], [3, 4]])

        with pytest.raises(ValueError, match="read-only"):
            ds.outcomes[0, 0] = 5.0

    def test_take_renames_repeats(self) -> None:
        """Resampled subjects get distinct draw-suffixed identifiers."""
        ds = make_tiny_panel([[1, 2], [3, 4]])
        drawn = ds.take([1, 1, 0])

        assert drawn.subject_ids == ("s02#0", "s02#1", "s01#2")
        np.testing.assert_array_equal(drawn.outcomes[:, 0], [3, 3, 1])

    def test_fingerprint_tracks_outcomes(self) -> None:
        """Changing one outcome changes the fingerprint."""
        ds = make_tiny_panel([[1, 2], [3, 4]])
        changed = ds.with_outcomes([[1, 2], [3, 5]])

        assert ds.fingerprint() == make_tiny_panel([[1, 2], [3, 4]]).fingerprint()
        assert ds.fingerprint() != changed.fingerprint()

    def test_history_namespace_names(self) -> None:
        """History references cover baseline covariates and every visit outcome."""
        ds = make_tiny_panel([[1, 2, 3], [4, 5, 6]])
        namespace = ds.history_namespace()

        assert set(namespace) == {"x1", "y1", "y2", "y3"}
        np.testing.assert_array_equal(namespace["y2"], [2, 5])


# ── Monotone bookkeeping ──────────────────────────────────────────────


class TestValidateMonotone:
    """Derivation of R, C and J."""

    def test_completer(self) -> None:
        """Pattern (1,1,1) gives J=3 and C=(0,0,1)."""
        profile = validate_monotone(make_tiny_panel([[1, 2, 3]]))

        assert profile.last_visit.tolist() == [3]
        assert profile.censoring.tolist() == [[0, 0, 1]]
        assert profile.completers.tolist() == [True]

    def test_dropout_after_visit_two(self) -> None:
        """Pattern (1,1,0) gives J=2 and C=(0,1,0)."""
        profile = validate_monotone(make_tiny_panel([[1, 2, NAN]]))

        assert profile.last_visit.tolist() == [2]
        assert profile.observed.tolist() == [[1, 1, 0]]
        assert profile.censoring.tolist() == [[0, 1, 0]]

    def test_intermittent_gap_rejected(self) -> None:
        """Pattern (1,0,1) is non-monotone and names the subject."""
        ds = make_tiny_panel([[1, 2, 3], [1, NAN, 3]])

        with pytest.raises(NonMonotoneError, match="non-monotone, 1 subject") as exc_info:
            validate_monotone(ds)

        assert exc_info.value.details["subjects"] == ["s02"]
        assert intermittent_gaps(ds).tolist() == [[False, False, False], [False, True, False]]

    def test_censoring_rows_sum_to_one(self) -> None:
        """Every subject has exactly one censoring visit."""
        ds = make_tiny_panel([[1, 2, 3], [1, NAN, NAN], [1, 2, NAN]])
        profile = validate_monotone(ds)

        assert profile.censoring.sum(axis=1).tolist() == [1, 1, 1]

    def test_dropout_fraction(self) -> None:
        """Cumulative dropout share per visit."""
        ds = make_tiny_panel([[1, 2, 3], [1, NAN, NAN], [1, 2, NAN], [1, 2, 3]])
        profile = validate_monotone(ds)

        np.testing.assert_allclose(profile.dropout_fraction(), [0.0, 0.25, 0.5])


# ── CSV ingestion ─────────────────────────────────────────────────────


class TestIngestLongCsv:
    """Long-format CSV parsing."""

    def test_rows_in_any_order(self) -> None:
        """Subjects and visits are sorted; absent rows and NA cells become missing."""
        source = _make_csv(
            "b,0,1.5,2",
            "b,12,2.5,2",
            "a,0,1.0,3",
            "a,12,NA,3",
            "a,24,,3",
            "b,24,3.5,2",
            "c,0,0.5,1",
        )
        ds = ingest_long_csv(source, SCHEMA)

        assert ds.subject_ids == ("a", "b", "c")
        np.testing.assert_array_equal(ds.time_codes, [0, 12, 24])
        np.testing.assert_array_equal(ds.outcomes[1], [1.5, 2.5, 3.5])
        assert np.isnan(ds.outcomes[0, 1:]).all()
        assert np.isnan(ds.outcomes[2, 1:]).all()
        np.testing.assert_array_equal(ds.covariate("x1"), [3, 2, 1])

    def test_month_codes(self) -> None:
        """Visits coded in months keep their values."""
        source = _make_csv("a,0,1,0", "a,12,2,0", "a,24,3,0", "a,36,4,0")
        ds = ingest_long_csv(source, SCHEMA)

        np.testing.assert_array_equal(ds.time_codes, [0, 12, 24, 36])
        assert ds.n_visits == 4

    def test_partial_follow_up(self) -> None:
        """A subject with rows at visits 1 and 2 only has J=2."""
        source = _make_csv("a,0,1,0", "a,1,2,0", "b,0,1,1", "b,1,2,1", "b,2,3,1")
        profile = validate_monotone(ingest_long_csv(source, SCHEMA))

        assert profile.last_visit.tolist() == [2, 3]
        assert profile.observed[0].tolist() == [1, 1, 0]

    def test_duplicate_rows(self) -> None:
        """A repeated (subject, visit) pair is an error."""
        source = _make_csv("a,0,1,0", "a,0,2,0", "a,1,3,0")

        with pytest.raises(DuplicateRowError) as exc_info:
            ingest_long_csv(source, SCHEMA)

        assert exc_info.value.details["pairs"] == ["a@0"]

    def test_non_numeric_outcome(self) -> None:
        """Text in the outcome column is rejected."""
        source = _make_csv("a,0,1,0", "a,1,high,0")

        with pytest.raises(SchemaError, match="non-numeric"):
            ingest_long_csv(source, SCHEMA)

    def test_unknown_schema_column(self) -> None:
        """Schema columns absent from the CSV are listed."""
        source = _make_csv("a,0,1,0", "a,1,2,0")

        with pytest.raises(SchemaError) as exc_info:
            ingest_long_csv(source, DatasetSchema(baseline=("x1", "age")))

        assert exc_info.value.details["columns"] == ["age"]

    def test_missing_baseline_outcome(self) -> None:
        """An NA first-visit outcome is rejected."""
        source = _make_csv("a,0,NA,0", "a,1,2,0")

        with pytest.raises(MissingBaselineError):
            ingest_long_csv(source, SCHEMA)

    def test_export_round_trip_is_exact(self) -> None:
        """Values written at 17 significant digits read back bit for bit."""
        ds = make_tiny_panel([[1 / 3, 2 / 7, NAN], [math.pi, math.e, 1e-300]])
        buffer = io.StringIO()
        write_csv(to_long_frame(ds), buffer)
        buffer.seek(0)
        back = ingest_long_csv(buffer, SCHEMA)

        np.testing.assert_array_equal(back.outcomes, ds.outcomes)
        np.testing.assert_array_equal(back.baseline, ds.baseline)

    def test_provenance_column(self) -> None:
        """A provenance column is returned as an N×M tag matrix."""
        header = "subject_id,visit,y,x1,provenance"
        source = _make_csv(
            "a,0,1,0,observed",
            "a,1,2.5,0,imputed:paik",
            "b,0,1,1,observed",
            "b,1,3,1,observed",
            header=header,
        )
        ds, tags = ingest_completed_csv(source, SCHEMA)

        assert tags is not None
        assert tags.tolist() == [["observed", "imputed:paik"], ["observed", "observed"]]
        assert ds.observed.all()

    def test_no_provenance_column(self) -> None:
        """A raw CSV yields no tags."""
        _, tags = ingest_completed_csv(_make_csv("a,0,1,0", "a,1,2,0"), SCHEMA)

        assert tags is None


# ── Gap filling ───────────────────────────────────────────────────────


class TestFillIntermediateGaps:
    """Sequential-regression filling of intermittent gaps."""

    def test_no_gaps_returns_same_dataset(self) -> None:
        """A monotone panel comes back untouched."""
        ds = make_tiny_panel([[1, 2, 3], [1, 2, NAN]])

        assert fill_intermediate_gaps(ds, HistoryDesign(baseline=("x1",))) is ds

    def test_single_gap_matches_least_squares(self) -> None:
        """The filled value is the OLS prediction of Y2 on (1, x1, Y1)."""
        full = make_complete_panel(n=200)
        outcomes = np.array(full.outcomes)
        outcomes[0, 1] = np.nan
        ds = full.with_outcomes(outcomes)

        filled = fill_intermediate_gaps(ds, HistoryDesign(baseline=("x1",)))

        x = np.column_stack([np.ones(200), ds.covariate("x1"), outcomes[:, 0]])
        rows = np.arange(200) > 0
        beta = np.linalg.solve(x[rows].T @ x[rows], x[rows].T @ outcomes[rows, 1])
        assert filled.outcomes[0, 1] == pytest.approx(float(x[0] @ beta), abs=1e-8)
        np.testing.assert_array_equal(filled.outcomes[1:], full.outcomes[1:])
        validate_monotone(filled)

    def test_unfittable_gap(self) -> None:
        """With nobody observed at the gap visit the fill is refused."""
        ds = make_tiny_panel([[1, NAN, 3], [2, NAN, 4], [3, NAN, 5]])

        with pytest.raises(GapFillError) as exc_info:
            fill_intermediate_gaps(ds, HistoryDesign(baseline=("x1",)))

        assert exc_info.value.details["visit"] == 2


# ── Summaries ─────────────────────────────────────────────────────────


class TestSummaries:
    """Per-visit descriptive tables."""

    def test_by_completion(self) -> None:
        """Completers and dropouts are summarized separately."""
        ds = make_tiny_panel([[1, 2, 3], [2, 3, 4], [1, 2, NAN], [3, NAN, NAN]])
        table = summarize(ds, validate_monotone(ds), by=SummaryStratum.COMPLETION)
        completers = table[table["stratum"] == "completers"].set_index("visit")
        dropouts = table[table["stratum"] == "dropouts"].set_index("visit")

        assert completers.loc[1, "n"] == 2
        assert completers.loc[1, "mean"] == pytest.approx(1.5)
        assert completers.loc[1, "sd"] == pytest.approx(math.sqrt(0.5))
        assert dropouts.loc[2, "n"] == 1
        assert math.isnan(dropouts.loc[2, "sd"])
        assert dropouts.loc[2, "dropout_pct"] == pytest.approx(50.0)
        assert dropouts.loc[3, "n"] == 0
        assert math.isnan(dropouts.loc[3, "mean"])

    def test_group_falls_back_to_all(self) -> None:
        """Without group labels a single stratum is reported."""
        ds = make_tiny_panel([[1, 2], [3, 4]])
        table = summarize(ds, validate_monotone(ds))

        assert table["stratum"].unique().tolist() == ["all"]
        assert table["mean"].tolist() == [2.0, 3.0]

    def test_available_case_difference(self) -> None:
        """Observed-mean arm difference per visit."""
        ds = LongitudinalDataset.build(
            ("a", "b", "c", "d"),
            [[1, 2], [2, NAN], [1, 5], [3, 7]],
            [0, 1],
            baseline={"arm": [1, 1, 0, 0]},
        )
        table = available_case_difference(ds, validate_monotone(ds), "arm")

        assert table["difference"].tolist() == pytest.approx([-0.5, -4.0])
