"""Long-format CSV ingestion and export.

One row per (subject, visit). Missing outcomes are empty cells or the
literal ``NA``; absent (subject, visit) rows are missing as well. Visits are
aligned to the sorted distinct time codes and subjects to their sorted ids,
so row order in the file never changes the dataset.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import IO, Final

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.config.settings import get_settings
from aipw.models import DatasetSchema
from aipw.shared.errors import DuplicateRowError, SchemaError

from .dataset import LongitudinalDataset

logger = logging.getLogger(__name__)

CsvSource = str | Path | IO[str] | IO[bytes]

PROVENANCE_COLUMN: Final = "provenance"
_MISSING_TOKENS: Final = ("", "NA")
_MAX_LISTED: Final = 20


def _read_frame(source: CsvSource, schema: DatasetSchema) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            source,
            dtype=str,
            keep_default_na=False,
            na_values=[],
            encoding="utf-8",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        msg = f"cannot parse CSV: {exc}"
        raise SchemaError(msg) from exc
    required = [schema.subject, schema.visit, schema.outcome, *schema.covariates]
    if schema.group is not None:
        required.append(schema.group)
    unknown = [column for column in required if column not in frame.columns]
    if unknown:
        msg = f"unknown schema column(s) {unknown}; CSV has {list(frame.columns)}"
        raise SchemaError(msg, {"columns": unknown})
    return frame


def _numeric(frame: pd.DataFrame, column: str, *, allow_missing: bool) -> pd.Series:
    """Parse a text column to floats, rejecting anything but numbers and missing tokens."""
    raw = frame[column].str.strip()
    missing = raw.isin(_MISSING_TOKENS)
    values = pd.to_numeric(raw.where(~missing), errors="coerce")
    bad = values.isna() & ~missing
    if bad.any():
        samples = raw[bad].unique()[:_MAX_LISTED].tolist()
        msg = f"non-numeric values in column '{column}': {samples}"
        raise SchemaError(msg, {"column": column, "values": samples})
    if not allow_missing and missing.any():
        msg = f"column '{column}' must not contain missing values"
        raise SchemaError(msg, {"column": column})
    return values.astype(float)


def _check_duplicates(frame: pd.DataFrame, schema: DatasetSchema) -> None:
    duplicated = frame.duplicated(subset=[schema.subject, "_time"], keep=False)
    if duplicated.any():
        pairs = (
            frame.loc[duplicated, [schema.subject, "_time"]]
            .drop_duplicates()
            .head(_MAX_LISTED)
            .itertuples(index=False, name=None)
        )
        listed = [f"{subject}@{time:g}" for subject, time in pairs]
        msg = f"duplicate (subject, visit) rows: {listed}"
        raise DuplicateRowError(msg, {"pairs": listed})


def _panel(
    frame: pd.DataFrame, subject: str, column: str, ids: pd.Index, times: pd.Index
) -> pd.DataFrame:
    return frame.pivot(index=subject, columns="_time", values=column).reindex(
        index=ids, columns=times
    )


def _ingest(
    source: CsvSource, schema: DatasetSchema
) -> tuple[LongitudinalDataset, pd.DataFrame]:
    frame = _read_frame(source, schema)
    frame[schema.subject] = frame[schema.subject].str.strip()
    frame["_time"] = _numeric(frame, schema.visit, allow_missing=False)
    frame["_y"] = _numeric(frame, schema.outcome, allow_missing=True)
    for name in schema.covariates:
        frame[f"_cov_{name}"] = _numeric(frame, name, allow_missing=True)
    _check_duplicates(frame, schema)

    ids = pd.Index(sorted(frame[schema.subject].unique()))
    times = pd.Index(sorted(frame["_time"].unique()))
    outcomes = _panel(frame, schema.subject, "_y", ids, times)

    # Baseline covariates and the group label are read from the first-visit row.
    first = frame.loc[frame["_time"] == times[0]].set_index(schema.subject).reindex(ids)
    baseline = {name: first[f"_cov_{name}"].to_numpy(dtype=float) for name in schema.baseline}
    time_varying = {
        name: _panel(frame, schema.subject, f"_cov_{name}", ids, times).to_numpy(dtype=float)
        for name in schema.time_varying
    }
    groups = None
    if schema.group is not None:
        groups = tuple("" if pd.isna(label) else str(label) for label in first[schema.group])

    ds = LongitudinalDataset.build(
        tuple(ids),
        outcomes.to_numpy(dtype=float),
        times.to_numpy(dtype=float),
        baseline=baseline,
        time_varying=time_varying,
        groups=groups,
        outcome_name=schema.outcome,
    )
    logger.info(
        "Ingested %d subjects over %d visits (%d rows)", ds.n_subjects, ds.n_visits, len(frame)
    )
    return ds, frame


def ingest_long_csv(source: CsvSource, schema: DatasetSchema) -> LongitudinalDataset:
    """Read a long-format CSV into a dataset.

    Args:
        source: Path or open text/byte stream.
        schema: Column mapping.

    Returns:
        The dataset, subjects sorted by id and visits by time code.

    Raises:
        SchemaError: Unknown column, unparsable CSV or non-numeric values.
        DuplicateRowError: A (subject, visit) pair appears more than once.
        MissingBaselineError: A subject lacks the first-visit outcome.
        MissingCovariateError: A covariate is missing while on study.
    """
    ds, _ = _ingest(source, schema)
    return ds


def ingest_completed_csv(
    source: CsvSource, schema: DatasetSchema
) -> tuple[LongitudinalDataset, npt.NDArray[np.str_] | None]:
    """Read a CSV that may carry a ``provenance`` column.

    Returns:
        The dataset and the ``N × M`` provenance tags, or ``None`` when the
        file has no provenance column.
    """
    ds, frame = _ingest(source, schema)
    if PROVENANCE_COLUMN not in frame.columns:
        return ds, None
    tags = _panel(
        frame,
        schema.subject,
        PROVENANCE_COLUMN,
        pd.Index(ds.subject_ids),
        pd.Index(ds.time_codes),
    )
    raw = tags.to_numpy(dtype=object)
    return ds, np.where(pd.isna(raw), "", raw).astype(str)


def to_long_frame(
    ds: LongitudinalDataset,
    schema: DatasetSchema | None = None,
    *,
    values: npt.ArrayLike | None = None,
    provenance: npt.ArrayLike | None = None,
) -> pd.DataFrame:
    """Long-format frame mirroring the input schema.

    Args:
        ds: Dataset to export.
        schema: Column names (defaults derived from the dataset).
        values: Replacement ``N × M`` outcome matrix (e.g. completed data).
        provenance: Optional ``N × M`` provenance tags.

    Returns:
        One row per subject and visit, subjects outermost.
    """
    columns = schema or DatasetSchema(
        outcome=ds.outcome_name,
        baseline=ds.baseline_names,
        time_varying=ds.time_varying_names,
        group="group" if ds.groups is not None else None,
    )
    n, m = ds.outcomes.shape
    y = ds.outcomes if values is None else np.asarray(values, dtype=float)
    data: dict[str, Sequence[object] | npt.NDArray[np.generic]] = {
        columns.subject: np.repeat(np.asarray(ds.subject_ids, dtype=object), m),
        columns.visit: np.tile(ds.time_codes, n),
        columns.outcome: y.reshape(-1),
    }
    for index in range(len(ds.baseline_names)):
        data[columns.baseline[index]] = np.repeat(ds.baseline[:, index], m)
    for index in range(len(ds.time_varying_names)):
        data[columns.time_varying[index]] = ds.time_varying[:, :, index].reshape(-1)
    if columns.group is not None and ds.groups is not None:
        data[columns.group] = np.repeat(np.asarray(ds.groups, dtype=object), m)
    if provenance is not None:
        data[PROVENANCE_COLUMN] = np.asarray(provenance, dtype=object).reshape(-1)
    return pd.DataFrame(data)


def write_csv(frame: pd.DataFrame, destination: CsvSource) -> None:
    """Write a frame with round-trip float formatting and ``NA`` for missing."""
    digits = get_settings().csv_significant_digits
    frame.to_csv(
        destination,
        index=False,
        float_format=f"%.{digits}g",
        na_rep="NA",
        lineterminator="\n",
    )


def export_long_csv(
    ds: LongitudinalDataset,
    destination: CsvSource,
    schema: DatasetSchema | None = None,
    *,
    values: npt.ArrayLike | None = None,
    provenance: npt.ArrayLike | None = None,
) -> None:
    """Write a dataset (or completed values) in the long CSV format.

    Rows for missing outcomes are kept with an ``NA`` outcome so the visit
    grid survives the round trip.
    """
    frame = to_long_frame(ds, schema, values=values, provenance=provenance)
    write_csv(frame, destination)
    logger.info("Wrote %d rows", len(frame))
