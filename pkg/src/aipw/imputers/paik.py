"""Sequential mean imputation over a triangular array of regressions.

For each target visit k the recursion starts with the regression of Yₖ on
the history through k-1 among subjects observed at k, then walks back:
the depth-s model regresses the depth-(s+1) imputations on the history
through s among subjects observed at s+1. A subject last seen at s takes
the depth-s prediction; observed cells always keep their values.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.glm_core import LinearModelFit, build_design, check_history_bound, fit_ols, predict
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.models import DesignSpec, HistoryDesign
from aipw.shared.constants import METHOD_PAIK
from aipw.shared.errors import FingerprintMismatchError, InsufficientDataError

from .completed import CompletedDataset

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

ModelKey = tuple[int, int]


@dataclass(frozen=True, slots=True)
class SequentialModelArray:
    """Triangular array of outcome regressions keyed by ``(k, s)``, 1 ≤ s < k ≤ M.

    Model ``(k, s)`` predicts the visit-k outcome from the history through s.
    """

    fits: Mapping[ModelKey, LinearModelFit]
    designs: Mapping[ModelKey, DesignSpec]
    n_visits: int
    dataset_fingerprint: str

    def predict(self, ds: LongitudinalDataset, k: int, s: int) -> FloatArray:
        """Model ``(k, s)`` evaluated for every subject (NaN without history through s)."""
        if self.dataset_fingerprint != ds.fingerprint():
            msg = "sequential models were fit on a different dataset"
            raise FingerprintMismatchError(msg)
        x = build_design(self.designs[k, s], ds.history_namespace())
        return predict(self.fits[k, s], x)

    def coefficients_frame(self) -> pd.DataFrame:
        """Diagnostics table ``k, s, term, coefficient``."""
        rows = [
            {"k": k, "s": s, "term": term, "coefficient": float(coefficient)}
            for (k, s), fit in sorted(self.fits.items())
            for term, coefficient in zip(self.designs[k, s].terms, fit.coefficients, strict=True)
        ]
        return pd.DataFrame.from_records(rows, columns=["k", "s", "term", "coefficient"])


def sequential_design(design: HistoryDesign, k: int, s: int) -> DesignSpec:
    """Design of model ``(k, s)``: the history through s, or the ``"k,s"`` override."""
    spec = design.at_depth(s, override_key=f"{k},{s}")
    check_history_bound(spec, s + 1, f"sequential model ({k},{s})")
    return spec


def _fit(
    spec: DesignSpec,
    namespace: Mapping[str, FloatArray],
    response: FloatArray,
    rows: npt.NDArray[np.bool_],
    key: ModelKey,
) -> tuple[LinearModelFit, FloatArray]:
    x = build_design(spec, namespace)
    try:
        fit = fit_ols(x[rows], response[rows], design=spec)
    except InsufficientDataError as exc:
        k, s = key
        msg = f"cannot fit sequential model ({k},{s}): {exc.message}"
        raise InsufficientDataError(msg, {"k": k, "s": s, **exc.details}) from exc
    return fit, x


def paik_impute(
    ds: LongitudinalDataset, profile: MissingnessProfile, design: HistoryDesign
) -> tuple[SequentialModelArray, CompletedDataset]:
    """Fit the triangular model array and impute every dropout cell.

    Args:
        ds: Monotone dataset.
        profile: Its missingness profile.
        design: History design expanded per depth (overrides keyed ``"k,s"``).

    Returns:
        The model array and the completed dataset.

    Raises:
        InsufficientDataError: Some model ``(k, s)`` has too few subjects.
        DesignError: A design references data beyond its depth.
    """
    namespace = ds.history_namespace()
    last = profile.last_visit
    values = np.array(ds.outcomes)
    fits: dict[ModelKey, LinearModelFit] = {}
    designs: dict[ModelKey, DesignSpec] = {}

    for k in range(2, ds.n_visits + 1):
        # Imputations of Yₖ at the current depth; exact for subjects seen at k.
        current = np.array(ds.outcomes[:, k - 1])
        for s in range(k - 1, 0, -1):
            spec = sequential_design(design, k, s)
            fit, x = _fit(spec, namespace, current, last >= s + 1, (k, s))
            stopped = last == s
            current[stopped] = predict(fit, x[stopped])
            fits[k, s] = fit
            designs[k, s] = spec
        values[:, k - 1] = current

    sma = SequentialModelArray(
        fits=fits, designs=designs, n_visits=ds.n_visits, dataset_fingerprint=ds.fingerprint()
    )
    logger.info("Paik imputation: %d sequential model(s) fit", len(fits))
    completed = CompletedDataset.from_values(ds, profile, values, METHOD_PAIK)
    return sma, completed
