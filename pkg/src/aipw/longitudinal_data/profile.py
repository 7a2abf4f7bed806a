"""Missingness bookkeeping: observed (R), censoring (C) and last-visit (J) indicators."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from aipw.shared.errors import NonMonotoneError

from .dataset import LongitudinalDataset

logger = logging.getLogger(__name__)

IntArray = npt.NDArray[np.int64]


@dataclass(frozen=True, slots=True)
class MissingnessProfile:
    """Monotone-dropout indicators for a validated dataset.

    Attributes:
        observed: ``N × M`` 0/1 matrix R.
        censoring: ``N × M`` 0/1 matrix C with one 1 per row at the last visit.
        last_visit: Length-``N`` 1-based last observed visit J.
    """

    observed: IntArray
    censoring: IntArray
    last_visit: IntArray

    @classmethod
    def from_last_visit(cls, last_visit: npt.ArrayLike, n_visits: int) -> MissingnessProfile:
        """Build R and C from J."""
        j = np.asarray(last_visit, dtype=np.int64)
        visits = np.arange(1, n_visits + 1)
        observed = (visits[None, :] <= j[:, None]).astype(np.int64)
        censoring = (visits[None, :] == j[:, None]).astype(np.int64)
        for array in (j, observed, censoring):
            array.setflags(write=False)
        return cls(observed=observed, censoring=censoring, last_visit=j)

    @property
    def n_visits(self) -> int:
        """Number of visits M."""
        return self.observed.shape[1]

    @property
    def completers(self) -> npt.NDArray[np.bool_]:
        """Subjects observed at every visit."""
        return self.last_visit == self.n_visits

    def dropout_fraction(self) -> npt.NDArray[np.float64]:
        """Cumulative dropout share ``1 - mean(R[:, j])`` per visit."""
        return 1.0 - self.observed.mean(axis=0)


def find_nonmonotone_subjects(ds: LongitudinalDataset) -> list[str]:
    """Subjects with a missing outcome followed by an observed one."""
    gaps = intermittent_gaps(ds)
    return [ds.subject_ids[i] for i in np.flatnonzero(gaps.any(axis=1))]


def intermittent_gaps(ds: LongitudinalDataset) -> npt.NDArray[np.bool_]:
    """``N × M`` mask of missing cells with some later observed cell."""
    observed = ds.observed
    later = np.zeros_like(observed)
    # Reversed running OR over the visits after j.
    later[:, :-1] = np.flip(
        np.logical_or.accumulate(np.flip(observed[:, 1:], axis=1), axis=1), axis=1
    )
    return later & ~observed


def validate_monotone(ds: LongitudinalDataset) -> MissingnessProfile:
    """Derive R, C and J after checking the dropout pattern is monotone.

    Args:
        ds: A well-formed dataset.

    Returns:
        The missingness profile.

    Raises:
        NonMonotoneError: Some subject has an intermittent missing outcome.
    """
    offenders = find_nonmonotone_subjects(ds)
    if offenders:
        msg = f"non-monotone, {len(offenders)} subject(s)"
        raise NonMonotoneError(msg, {"subjects": offenders})
    last_visit = ds.observed.sum(axis=1)
    profile = MissingnessProfile.from_last_visit(last_visit, ds.n_visits)
    logger.debug(
        "Monotone profile: %d subjects, %d completers",
        ds.n_subjects,
        int(profile.completers.sum()),
    )
    return profile
