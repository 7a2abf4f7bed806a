"""Opt-in filling of intermittent (non-monotone) outcome gaps.

A gap is a missing outcome followed by some later observed outcome. Each
gap at visit j is replaced by the sequential-regression prediction of Yⱼ
given the history through j-1, fit on the subjects observed at j. Visits
are processed in order so earlier fills feed later histories.
"""

from __future__ import annotations

import logging

import numpy as np

from aipw.glm_core import build_design, check_history_bound, fit_ols, predict
from aipw.models import HistoryDesign
from aipw.shared.errors import GapFillError, InsufficientDataError

from .dataset import LongitudinalDataset
from .profile import intermittent_gaps

logger = logging.getLogger(__name__)

_EXTRA_ROWS = 2


def fill_intermediate_gaps(ds: LongitudinalDataset, design: HistoryDesign) -> LongitudinalDataset:
    """Replace intermittent gaps by sequential-regression predictions.

    Args:
        ds: Dataset possibly containing intermittent gaps.
        design: History design; ``design.at_depth(j - 1)`` predicts visit ``j``.
            Overrides are looked up under the visit number.

    Returns:
        ``ds`` itself when there are no gaps, otherwise a copy whose gaps are
        filled. Observed cells are never modified.

    Raises:
        GapFillError: Fewer than ``p + 2`` subjects observed at a gap visit.
        DesignError: The design references data at or after the gap visit.
    """
    gaps = intermittent_gaps(ds)
    if not gaps.any():
        return ds

    y = np.array(ds.outcomes)
    for visit in range(2, ds.n_visits + 1):
        column = visit - 1
        need = gaps[:, column]
        if not need.any():
            continue
        spec = design.at_depth(visit - 1, override_key=str(visit))
        check_history_bound(spec, visit, f"gap-fill model for visit {visit}")
        x = build_design(spec, ds.history_namespace(y))
        rows = np.isfinite(y[:, column]) & np.all(np.isfinite(x), axis=1)
        available = int(rows.sum())
        if available < spec.width + _EXTRA_ROWS:
            msg = (
                f"cannot fill gaps at visit {visit}: {available} subject(s) observed, "
                f"need at least {spec.width + _EXTRA_ROWS}"
            )
            raise GapFillError(msg, {"visit": visit, "available": available})
        try:
            fit = fit_ols(x[rows], y[rows, column], design=spec)
        except InsufficientDataError as exc:
            raise GapFillError(exc.message, {"visit": visit, **exc.details}) from exc
        y[need, column] = predict(fit, x[need])
        logger.info("Filled %d intermittent gap(s) at visit %d", int(need.sum()), visit)

    return ds.with_outcomes(y)
