"""Completed (fully imputed) outcome matrices with per-cell provenance."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile, to_long_frame
from aipw.models import DatasetSchema
from aipw.shared.constants import (
    PROVENANCE_GAP_FILL,
    PROVENANCE_IMPUTED_PREFIX,
    PROVENANCE_OBSERVED,
)
from aipw.shared.errors import DataValidationError

FloatArray = npt.NDArray[np.float64]

COMPARISON_COLUMNS = (
    "visit",
    "time",
    "n_observed",
    "observed_mean",
    "n_imputed",
    "imputed_mean",
    "completed_mean",
)


@dataclass(frozen=True, slots=True)
class CompletedDataset:
    """Imputed ``N × M`` outcomes and where each value came from.

    Attributes:
        source: Dataset the values complete.
        values: ``N × M`` completed outcomes, no missing cells.
        provenance: ``N × M`` tags ``observed`` or ``imputed:<method>``.
        method: Imputation method name.
        fingerprints: Fingerprints of the inputs used (dataset and models).
    """

    source: LongitudinalDataset
    values: FloatArray
    provenance: npt.NDArray[np.str_]
    method: str
    fingerprints: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != self.source.outcomes.shape:
            expected = self.source.outcomes.shape
            msg = f"completed values have shape {values.shape}, expected {expected}"
            raise DataValidationError(msg)
        if not np.all(np.isfinite(values)):
            msg = f"{self.method} left {int((~np.isfinite(values)).sum())} missing cell(s)"
            raise DataValidationError(msg)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(
        cls,
        ds: LongitudinalDataset,
        profile: MissingnessProfile,
        values: npt.ArrayLike,
        method: str,
        fingerprints: Mapping[str, str] | None = None,
    ) -> CompletedDataset:
        """Tag a cell ``observed`` iff it was observed and kept its exact value."""
        completed = np.asarray(values, dtype=float)
        kept = (profile.observed == 1) & (completed == ds.outcomes)
        provenance = np.where(kept, PROVENANCE_OBSERVED, f"{PROVENANCE_IMPUTED_PREFIX}{method}")
        return cls(
            source=ds,
            values=completed,
            provenance=provenance,
            method=method,
            fingerprints={"dataset": ds.fingerprint(), **(fingerprints or {})},
        )

    @classmethod
    def from_provenance(
        cls, ds: LongitudinalDataset, provenance: npt.ArrayLike
    ) -> CompletedDataset:
        """Rebuild a completed dataset read back from a CSV with provenance tags.

        Cells not tagged ``observed`` (or ``imputed:gap-fill``, filled before
        any dropout model ran) become missing in the source, so the source is
        the panel the values complete.

        Raises:
            DataValidationError: Tags mix methods or the file has missing values.
        """
        tags = np.asarray(provenance, dtype=str)
        imputed = (tags != PROVENANCE_OBSERVED) & (tags != PROVENANCE_GAP_FILL)
        methods = sorted(
            {str(tag).removeprefix(PROVENANCE_IMPUTED_PREFIX) for tag in tags[imputed]}
        )
        if len(methods) > 1:
            msg = f"completed file mixes imputation methods {methods}"
            raise DataValidationError(msg, {"methods": methods})
        source = ds.with_outcomes(np.where(imputed, np.nan, ds.outcomes))
        return cls(
            source=source,
            values=ds.outcomes,
            provenance=tags,
            method=methods[0] if methods else PROVENANCE_OBSERVED,
            fingerprints={"dataset": source.fingerprint()},
        )

    def to_frame(self, schema: DatasetSchema | None = None) -> pd.DataFrame:
        """Long-format frame with a ``provenance`` column."""
        return to_long_frame(self.source, schema, values=self.values, provenance=self.provenance)


def _mean(values: FloatArray) -> float:
    return float(values.sum() / values.shape[0]) if values.shape[0] else math.nan


def compare_completed(ds: LongitudinalDataset, completed: CompletedDataset) -> pd.DataFrame:
    """Observed-only, imputed-cell and completed means per visit.

    Imputed cells are the cells missing in ``ds``; with no dropout the
    imputed columns are empty (count 0, mean NaN).
    """
    observed = ds.observed
    rows: list[dict[str, object]] = []
    for column in range(ds.n_visits):
        seen = observed[:, column]
        values = completed.values[:, column]
        rows.append(
            {
                "visit": column + 1,
                "time": float(ds.time_codes[column]),
                "n_observed": int(seen.sum()),
                "observed_mean": _mean(ds.outcomes[seen, column]),
                "n_imputed": int((~seen).sum()),
                "imputed_mean": _mean(values[~seen]),
                "completed_mean": _mean(values),
            }
        )
    return pd.DataFrame.from_records(rows, columns=list(COMPARISON_COLUMNS))
