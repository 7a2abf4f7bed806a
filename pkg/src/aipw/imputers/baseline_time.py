"""Single mean model over baseline covariates and time."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from aipw.estimators import MmrmFit, fit_mmrm
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.models import DesignSpec
from aipw.shared.constants import TIME_REFERENCE, VISIT_INDICATOR_PREFIX
from aipw.shared.errors import DesignError, FingerprintMismatchError

logger = logging.getLogger(__name__)

_VISIT_INDICATOR = re.compile(rf"^{VISIT_INDICATOR_PREFIX}\d+$")


@dataclass(frozen=True, slots=True)
class BaselineTimeModel:
    """Repeated-measures fit whose mean depends on baseline covariates and time only.

    Attributes:
        fit: Unstructured-covariance maximum-likelihood fit.
        dataset_fingerprint: Fingerprint of the dataset it was fit on.
    """

    fit: MmrmFit
    dataset_fingerprint: str

    @property
    def cov(self) -> npt.NDArray[np.float64]:
        """Fitted ``M × M`` residual covariance."""
        return self.fit.cov

    def predict(self) -> npt.NDArray[np.float64]:
        """``N × M`` predictions m̂(X₀ᵢ, tₖ)."""
        return self.fit.fitted_means

    def check_dataset(self, ds: LongitudinalDataset) -> None:
        """Raise unless the model was fit on ``ds``."""
        if self.dataset_fingerprint != ds.fingerprint():
            msg = "baseline-and-time model was fit on a different dataset"
            raise FingerprintMismatchError(msg)


def fit_baseline_time_model(
    ds: LongitudinalDataset, profile: MissingnessProfile, design: DesignSpec
) -> BaselineTimeModel:
    """Fit the mean model over (X₀, t) with unstructured covariance.

    Raises:
        DesignError: The design references anything but baseline covariates,
            ``t`` and visit indicators.
    """
    allowed = set(ds.baseline_names) | {TIME_REFERENCE}
    offending = sorted(
        ref
        for ref in design.references()
        if ref not in allowed and not _VISIT_INDICATOR.match(ref)
    )
    if offending:
        msg = f"baseline-and-time only: design references {offending}"
        raise DesignError(msg, {"references": offending})
    fit = fit_mmrm(ds, profile, design)
    logger.debug("Baseline-and-time model terms %s", list(design.terms))
    return BaselineTimeModel(fit=fit, dataset_fingerprint=ds.fingerprint())
