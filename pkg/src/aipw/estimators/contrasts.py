"""Per-visit means and least-squares mean contrasts."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from aipw.glm_core import build_design
from aipw.longitudinal_data import LongitudinalDataset
from aipw.shared.constants import TIME_REFERENCE, VISIT_INDICATOR_PREFIX
from aipw.shared.errors import DataValidationError, DesignError

from .gee import GeeFit
from .mmrm import MmrmFit

if TYPE_CHECKING:
    from aipw.imputers import CompletedDataset

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


def mean_at_visit(
    source: CompletedDataset | GeeFit | MmrmFit,
    visit: int,
    *,
    members: npt.ArrayLike | None = None,
) -> float:
    """Mean outcome at a 1-based visit.

    Completed data give the column mean; fitted models give the mean of
    their fitted marginal means.

    Args:
        source: Completed dataset or fitted mean model.
        visit: 1-based visit.
        members: Optional boolean subject filter.

    Raises:
        DataValidationError: The filter selects no subject or the column has gaps.
    """
    values = source.fitted_means if isinstance(source, (GeeFit, MmrmFit)) else source.values
    column = values[:, visit - 1]
    if members is not None:
        column = column[np.asarray(members, dtype=bool)]
    if column.shape[0] == 0:
        msg = f"empty group at visit {visit}"
        raise DataValidationError(msg)
    if not np.all(np.isfinite(column)):
        msg = f"missing values at visit {visit}"
        raise DataValidationError(msg)
    return float(column.sum() / column.shape[0])


def contrast_vector(
    fit: GeeFit | MmrmFit, ds: LongitudinalDataset, time: float, *, arm: str
) -> FloatArray:
    """Design difference between ``arm = 1`` and ``arm = 0`` at ``time``.

    Other baseline covariates sit at their sample means and time-varying
    covariates at their observed mean at the matching visit.

    Raises:
        DesignError: The design has no term involving ``arm``.
    """
    design = fit.design
    if arm not in design.references():
        msg = f"contrast references absent term '{arm}' (design: {list(design.terms)})"
        raise DesignError(msg, {"arm": arm})
    matches = np.flatnonzero(np.isclose(ds.time_codes, time))
    visit = int(matches[0]) + 1 if matches.size else 0

    namespace: dict[str, FloatArray] = {
        name: np.full(2, ds.baseline[:, index].mean())
        for index, name in enumerate(ds.baseline_names)
    }
    namespace[arm] = np.array([1.0, 0.0])
    namespace[TIME_REFERENCE] = np.full(2, float(time))
    for k in range(1, ds.n_visits + 1):
        namespace[f"{VISIT_INDICATOR_PREFIX}{k}"] = np.full(2, float(k == visit))
    observed = ds.observed
    for index, name in enumerate(ds.time_varying_names):
        column = visit - 1 if visit else 0
        values = ds.time_varying[observed[:, column], column, index]
        namespace[name] = np.full(2, values.mean() if values.size else 0.0)
    profiles = build_design(design, namespace)
    return profiles[0] - profiles[1]


def lsmean_diff(
    fit: GeeFit | MmrmFit, ds: LongitudinalDataset, time: float, *, arm: str
) -> float:
    """Model-adjusted arm difference ``cᵀβ̂`` at ``time``.

    Equals ``β_arm + t β_arm:t`` when the arm enters through a main effect
    and its time interaction, and ``t β_arm:t`` without the main effect.
    """
    return float(contrast_vector(fit, ds, time, arm=arm) @ fit.coefficients)
