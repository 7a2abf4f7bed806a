"""Observation probabilities and AIPW visit coefficients.

Matrices are padded to ``M + 1`` columns: column ``j`` (0-based) is visit
``j + 1`` and column ``M`` is the padding visit with zero hazard, so the
padded probability equals the last visit's.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.config.settings import get_settings
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.models import PositivityMode
from aipw.shared.errors import FingerprintMismatchError, PositivityError

from .hazards import HazardModelSet, predict_hazards

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

_MAX_LISTED = 20


@dataclass(frozen=True, slots=True)
class WeightTable:
    """Hazards and cumulative observation probabilities.

    Attributes:
        lam: ``N × (M+1)`` hazards; columns 0 and M are zero.
        pi: ``N × (M+1)`` cumulative products of ``1 - lam``.
        positivity_floor: Floor ε the probabilities were checked against.
        positivity: Violation handling that was applied.
        truncated: Number of on-study cells raised to the floor.
        subject_ids: Subject identifiers in row order.
        dataset_fingerprint: Fingerprint of the dataset the table belongs to.
    """

    lam: FloatArray
    pi: FloatArray
    positivity_floor: float
    positivity: PositivityMode
    truncated: int
    subject_ids: tuple[str, ...]
    dataset_fingerprint: str

    @property
    def n_visits(self) -> int:
        """Number of real visits M."""
        return self.pi.shape[1] - 1

    @property
    def visit_pi(self) -> FloatArray:
        """``N × M`` observation probabilities without the padding column."""
        return self.pi[:, :-1]

    def check_dataset(self, ds: LongitudinalDataset) -> None:
        """Raise unless the table was computed on ``ds``."""
        if self.dataset_fingerprint != ds.fingerprint():
            msg = "weight table was computed on a different dataset"
            raise FingerprintMismatchError(
                msg, {"expected": self.dataset_fingerprint, "actual": ds.fingerprint()}
            )


def _cumulative(lam: FloatArray) -> FloatArray:
    return np.cumprod(1.0 - lam, axis=1)


def compute_weights(
    hms: HazardModelSet,
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    *,
    floor: float | None = None,
    positivity: PositivityMode = PositivityMode.ERROR,
) -> WeightTable:
    """Predict hazards and accumulate observation probabilities.

    Args:
        hms: Hazard models fit on ``ds``.
        ds: The dataset.
        profile: Its missingness profile.
        floor: Positivity floor ε (defaults to settings).
        positivity: ``ERROR`` refuses on-study probabilities below ε;
            ``TRUNCATE`` raises them to ε and re-derives the hazards so the
            probabilities stay products of ``1 - lam``.

    Returns:
        The weight table.

    Raises:
        PositivityError: Some ``pi[i, j] < ε`` with ``R[i, j] = 1`` in error mode.
    """
    epsilon = get_settings().positivity_floor if floor is None else floor
    lam = predict_hazards(hms, ds, profile)
    pi = _cumulative(lam)

    on_study = np.zeros(pi.shape, dtype=bool)
    on_study[:, :-1] = profile.observed == 1
    violations = on_study & (pi < epsilon)
    truncated = 0
    if violations.any():
        rows = np.flatnonzero(violations.any(axis=1))
        subjects = [ds.subject_ids[i] for i in rows[:_MAX_LISTED]]
        if positivity is PositivityMode.ERROR:
            msg = (
                f"positivity violation: {rows.shape[0]} subject(s) with "
                f"observation probability below {epsilon:g}"
            )
            raise PositivityError(
                msg, {"subjects": subjects, "count": int(rows.shape[0]), "floor": epsilon}
            )
        truncated = int(violations.sum())
        pi = np.maximum(pi, epsilon)
        lam = np.zeros_like(pi)
        lam[:, 1:] = 1.0 - pi[:, 1:] / pi[:, :-1]
        logger.warning(
            "Truncated %d observation probabilities at %g (%d subjects)",
            truncated,
            epsilon,
            rows.shape[0],
        )

    lam.setflags(write=False)
    pi.setflags(write=False)
    logger.info("Weights computed: min on-study pi %.4g", float(pi[on_study].min()))
    return WeightTable(
        lam=lam,
        pi=pi,
        positivity_floor=epsilon,
        positivity=positivity,
        truncated=truncated,
        subject_ids=ds.subject_ids,
        dataset_fingerprint=ds.fingerprint(),
    )


def aipw_coefficient_matrix(wt: WeightTable, profile: MissingnessProfile) -> FloatArray:
    """``N × M`` matrix of ``(C[i,j] - lam[i,j+1] R[i,j]) / pi[i,j+1]``.

    Every row sums to 1 and the tail sum from visit l equals ``R[i,l]/pi[i,l]``.
    """
    c = profile.censoring.astype(float)
    r = profile.observed.astype(float)
    numerator = c - wt.lam[:, 1:] * r
    denominator = wt.pi[:, 1:]
    return np.divide(
        numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0.0
    )


def aipw_visit_coefficients(
    wt: WeightTable, profile: MissingnessProfile, subject: int
) -> FloatArray:
    """AIPW coefficients ``w[j]`` for one subject (row index)."""
    c = profile.censoring[subject].astype(float)
    r = profile.observed[subject].astype(float)
    return (c - wt.lam[subject, 1:] * r) / wt.pi[subject, 1:]


def weights_frame(wt: WeightTable, profile: MissingnessProfile) -> pd.DataFrame:
    """Diagnostics table ``subject_id, visit, lambda, pi, w`` (visits 1..M)."""
    n, m = profile.observed.shape
    coefficients = aipw_coefficient_matrix(wt, profile)
    return pd.DataFrame(
        {
            "subject_id": np.repeat(np.asarray(wt.subject_ids, dtype=object), m),
            "visit": np.tile(np.arange(1, m + 1), n),
            "lambda": wt.lam[:, :-1].reshape(-1),
            "pi": wt.visit_pi.reshape(-1),
            "w": coefficients.reshape(-1),
        }
    )
