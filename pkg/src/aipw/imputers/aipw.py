"""Doubly-robust completed data.

Both imputers produce, for visits k ≥ 2,

    Ŷₖ = (Rₖ / π̂ₖ) Yₖ + augmentation,

where the augmentation uses the sequential models (AIPW-I) or a single
baseline-and-time mean model (AIPW-S). Visit 1 always passes through.
"""

from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt

from aipw.dropout_weights import WeightTable, aipw_coefficient_matrix
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.shared.constants import METHOD_AIPW_I, METHOD_AIPW_S

from .baseline_time import BaselineTimeModel
from .completed import CompletedDataset
from .paik import SequentialModelArray

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


def _weighted_observed(
    ds: LongitudinalDataset, profile: MissingnessProfile, wt: WeightTable
) -> tuple[FloatArray, FloatArray]:
    """``R/π̂`` and ``(R/π̂) Y`` with zeros at unobserved cells."""
    observed = profile.observed == 1
    ratio = np.divide(1.0, wt.visit_pi, out=np.zeros(observed.shape), where=observed)
    return ratio, np.where(observed, ds.outcomes * ratio, 0.0)


def aipw_i_impute(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    wt: WeightTable,
    sma: SequentialModelArray,
) -> CompletedDataset:
    """AIPW imputation with the sequential model array as augmentation.

    ``Ŷₖ = (Rₖ/π̂ₖ) Yₖ + Σ_{j<k} wⱼ m̂ʲₖ(L̄ⱼ)`` with ``wⱼ`` the AIPW visit
    coefficients. ``wⱼ`` vanishes after the last visit, so models are only
    evaluated where the history through j is observed.

    Raises:
        FingerprintMismatchError: ``wt`` or ``sma`` belong to another dataset.
    """
    wt.check_dataset(ds)
    coefficients = aipw_coefficient_matrix(wt, profile)
    _, weighted = _weighted_observed(ds, profile, wt)
    observed = profile.observed == 1
    values = np.array(ds.outcomes)
    for k in range(2, ds.n_visits + 1):
        column = weighted[:, k - 1].copy()
        for j in range(1, k):
            prediction = sma.predict(ds, k, j)
            column += np.where(observed[:, j - 1], coefficients[:, j - 1] * prediction, 0.0)
        values[:, k - 1] = column
    logger.info("AIPW-I imputation complete for %d subjects", ds.n_subjects)
    return CompletedDataset.from_values(
        ds,
        profile,
        values,
        METHOD_AIPW_I,
        {"weights": wt.dataset_fingerprint, "sequential": sma.dataset_fingerprint},
    )


def aipw_s_impute(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    wt: WeightTable,
    btm: BaselineTimeModel,
) -> CompletedDataset:
    """AIPW imputation with a single baseline-and-time mean model.

    ``Ŷₖ = (Rₖ/π̂ₖ) Yₖ + (1 - Rₖ/π̂ₖ) m̂(X₀, tₖ)``.

    Raises:
        FingerprintMismatchError: ``wt`` or ``btm`` belong to another dataset.
    """
    wt.check_dataset(ds)
    btm.check_dataset(ds)
    ratio, weighted = _weighted_observed(ds, profile, wt)
    means = btm.predict()
    values = np.array(ds.outcomes)
    values[:, 1:] = weighted[:, 1:] + (1.0 - ratio[:, 1:]) * means[:, 1:]
    logger.info("AIPW-S imputation complete for %d subjects", ds.n_subjects)
    return CompletedDataset.from_values(
        ds,
        profile,
        values,
        METHOD_AIPW_S,
        {"weights": wt.dataset_fingerprint, "mean_model": btm.dataset_fingerprint},
    )
