"""Immutable N×M longitudinal panel.

Arrays are copied on construction and marked read-only, so a dataset can
be shared across parallel workers without defensive copies.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from aipw.models import outcome_reference, time_varying_reference
from aipw.shared.constants import TIME_REFERENCE, VISIT_INDICATOR_PREFIX
from aipw.shared.errors import DataValidationError, MissingBaselineError, MissingCovariateError

FloatArray = npt.NDArray[np.float64]

_MIN_VISITS = 2


def _frozen(values: npt.ArrayLike) -> FloatArray:
    array = np.array(values, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, slots=True)
class LongitudinalDataset:
    """Outcomes, covariates and time codes for N subjects over M visits.

    Attributes:
        subject_ids: Unique subject identifiers (row order).
        outcomes: ``N × M`` outcomes, NaN where missing.
        baseline: ``N × p`` baseline covariates.
        baseline_names: Names of the baseline columns.
        time_codes: Strictly increasing visit times.
        time_varying: ``N × M × q`` covariates (``q`` may be 0).
        time_varying_names: Names of the time-varying covariates.
        groups: Optional per-subject labels.
        outcome_name: Name of the outcome column in CSV form.
    """

    subject_ids: tuple[str, ...]
    outcomes: FloatArray
    baseline: FloatArray
    baseline_names: tuple[str, ...]
    time_codes: FloatArray
    time_varying: FloatArray
    time_varying_names: tuple[str, ...] = ()
    groups: tuple[str, ...] | None = None
    outcome_name: str = "y"

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", _frozen(self.outcomes))
        baseline = np.reshape(self.baseline, (len(self.subject_ids), -1))
        object.__setattr__(self, "baseline", _frozen(baseline))
        object.__setattr__(self, "time_codes", _frozen(self.time_codes))
        object.__setattr__(self, "time_varying", _frozen(self.time_varying))
        self._validate_shapes()
        self._validate_values()

    @classmethod
    def build(
        cls,
        subject_ids: tuple[str, ...],
        outcomes: npt.ArrayLike,
        time_codes: npt.ArrayLike,
        *,
        baseline: dict[str, npt.ArrayLike] | None = None,
        time_varying: dict[str, npt.ArrayLike] | None = None,
        groups: tuple[str, ...] | None = None,
        outcome_name: str = "y",
    ) -> LongitudinalDataset:
        """Assemble a dataset from named covariate columns.

        Args:
            subject_ids: Unique identifiers.
            outcomes: ``N × M`` outcomes.
            time_codes: Visit times.
            baseline: Name to length-``N`` column.
            time_varying: Name to ``N × M`` matrix.
            groups: Optional labels.
            outcome_name: Outcome column name.

        Returns:
            A validated dataset.
        """
        y = np.asarray(outcomes, dtype=float)
        n, m = y.shape
        base = baseline or {}
        varying = time_varying or {}
        base_matrix = (
            np.column_stack([np.asarray(v, dtype=float) for v in base.values()])
            if base
            else np.empty((n, 0))
        )
        varying_array = (
            np.stack([np.asarray(v, dtype=float) for v in varying.values()], axis=-1)
            if varying
            else np.empty((n, m, 0))
        )
        return cls(
            subject_ids=tuple(subject_ids),
            outcomes=y,
            baseline=base_matrix,
            baseline_names=tuple(base),
            time_codes=np.asarray(time_codes, dtype=float),
            time_varying=varying_array,
            time_varying_names=tuple(varying),
            groups=groups,
            outcome_name=outcome_name,
        )

    # ── Validation ───────────────────────────────────────────────────────

    def _validate_shapes(self) -> None:
        n = len(self.subject_ids)
        if n < 1:
            msg = "dataset needs at least one subject"
            raise DataValidationError(msg)
        if len(set(self.subject_ids)) != n:
            msg = "subject identifiers must be unique"
            raise DataValidationError(msg)
        if self.outcomes.ndim != 2 or self.outcomes.shape[0] != n:  # noqa: PLR2004
            msg = f"outcomes must be N×M with N={n}, got {self.outcomes.shape}"
            raise DataValidationError(msg)
        m = self.outcomes.shape[1]
        if m < _MIN_VISITS:
            msg = f"at least {_MIN_VISITS} visits are required, got {m}"
            raise DataValidationError(msg)
        if self.time_codes.shape != (m,) or np.any(np.diff(self.time_codes) <= 0):
            msg = "time_codes must be strictly increasing with one entry per visit"
            raise DataValidationError(msg)
        if self.baseline.shape[1] != len(self.baseline_names):
            msg = "baseline names do not match the baseline matrix"
            raise DataValidationError(msg)
        q = len(self.time_varying_names)
        if self.time_varying.shape != (n, m, q):
            msg = f"time_varying must be N×M×q = {(n, m, q)}, got {self.time_varying.shape}"
            raise DataValidationError(msg)
        if self.groups is not None and len(self.groups) != n:
            msg = "one group label per subject is required"
            raise DataValidationError(msg)

    def _validate_values(self) -> None:
        missing_baseline = ~np.isfinite(self.outcomes[:, 0])
        if missing_baseline.any():
            subjects = self._subjects_where(missing_baseline)
            msg = f"baseline outcome missing for {len(subjects)} subject(s)"
            raise MissingBaselineError(msg, {"subjects": subjects})
        bad_baseline = ~np.isfinite(self.baseline).all(axis=1)
        if bad_baseline.any():
            subjects = self._subjects_where(bad_baseline)
            msg = f"baseline covariates missing for {len(subjects)} subject(s)"
            raise MissingCovariateError(msg, {"subjects": subjects})
        if self.time_varying.shape[2]:
            on_study = np.isfinite(self.outcomes)[:, :, None]
            bad_varying = (on_study & ~np.isfinite(self.time_varying)).any(axis=(1, 2))
            if bad_varying.any():
                subjects = self._subjects_where(bad_varying)
                msg = (
                    "time-varying covariates missing at observed visits "
                    f"for {len(subjects)} subject(s)"
                )
                raise MissingCovariateError(msg, {"subjects": subjects})

    def _subjects_where(self, mask: npt.NDArray[np.bool_]) -> list[str]:
        return [self.subject_ids[i] for i in np.flatnonzero(mask)]

    # ── Shape ────────────────────────────────────────────────────────────

    @property
    def n_subjects(self) -> int:
        """Number of subjects N."""
        return self.outcomes.shape[0]

    @property
    def n_visits(self) -> int:
        """Number of visits M."""
        return self.outcomes.shape[1]

    @property
    def observed(self) -> npt.NDArray[np.bool_]:
        """Boolean ``N × M`` mask of observed outcomes."""
        return np.isfinite(self.outcomes)

    def covariate(self, name: str) -> FloatArray:
        """Baseline covariate column by name."""
        try:
            index = self.baseline_names.index(name)
        except ValueError as exc:
            msg = f"unknown baseline covariate '{name}'"
            raise DataValidationError(msg) from exc
        return self.baseline[:, index]

    def fingerprint(self) -> str:
        """Content hash identifying this exact dataset."""
        digest = hashlib.sha256()
        for array in (self.outcomes, self.baseline, self.time_codes, self.time_varying):
            digest.update(np.ascontiguousarray(array).tobytes())
        digest.update("\x1f".join(self.subject_ids).encode("utf-8"))
        return digest.hexdigest()[:16]

    # ── Namespaces ───────────────────────────────────────────────────────

    def history_namespace(self, outcomes: FloatArray | None = None) -> dict[str, FloatArray]:
        """Subject-level references: baseline covariates, ``y<k>`` and ``<z>@<k>``.

        Args:
            outcomes: Replacement outcome matrix (defaults to the observed one).

        Returns:
            Mapping of reference name to length-``N`` column.
        """
        y = self.outcomes if outcomes is None else outcomes
        namespace: dict[str, FloatArray] = {
            name: self.baseline[:, index] for index, name in enumerate(self.baseline_names)
        }
        for visit in range(1, self.n_visits + 1):
            namespace[outcome_reference(visit)] = y[:, visit - 1]
            for index, name in enumerate(self.time_varying_names):
                namespace[time_varying_reference(name, visit)] = self.time_varying[
                    :, visit - 1, index
                ]
        return namespace

    def long_namespace(self) -> dict[str, FloatArray]:
        """Occasion-level references as ``N × M`` arrays.

        Baseline covariates are broadcast over visits; ``t`` holds the time
        code, ``visit<k>`` the visit indicators and time-varying covariates
        appear under their bare names.
        """
        shape = self.outcomes.shape
        namespace: dict[str, FloatArray] = {
            name: np.broadcast_to(self.baseline[:, index, None], shape)
            for index, name in enumerate(self.baseline_names)
        }
        namespace[TIME_REFERENCE] = np.broadcast_to(self.time_codes, shape)
        for visit in range(1, self.n_visits + 1):
            indicator = np.zeros(shape)
            indicator[:, visit - 1] = 1.0
            namespace[f"{VISIT_INDICATOR_PREFIX}{visit}"] = indicator
        for index, name in enumerate(self.time_varying_names):
            namespace[name] = self.time_varying[:, :, index]
        return namespace

    # ── Derived datasets ─────────────────────────────────────────────────

    def with_outcomes(self, outcomes: npt.ArrayLike) -> LongitudinalDataset:
        """Copy with a replacement outcome matrix."""
        return dataclasses.replace(self, outcomes=np.asarray(outcomes, dtype=float))

    def take(self, indices: npt.ArrayLike) -> LongitudinalDataset:
        """Subjects at ``indices`` (with repetition) as a new dataset.

        Repeated subjects get distinct identifiers ``<id>#<draw>``.
        """
        rows = np.asarray(indices, dtype=int)
        ids = tuple(f"{self.subject_ids[i]}#{draw}" for draw, i in enumerate(rows))
        groups = None if self.groups is None else tuple(self.groups[i] for i in rows)
        return dataclasses.replace(
            self,
            subject_ids=ids,
            outcomes=self.outcomes[rows],
            baseline=self.baseline[rows],
            time_varying=self.time_varying[rows],
            groups=groups,
        )
