"""Recursive-regression (BR*) doubly-robust imputation.

For a target visit k the outcome Yₖ is regressed on the history through
k-1 plus a function of π̂ₖ among subjects observed at k. Its fitted values
then become the response of the depth-(k-2) regression on the history
through k-2 and π̂ₖ₋₁ among subjects observed at k-1, and so on down to
depth 1. The final depth-1 predictions replace every subject's Yₖ,
observed or not.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from aipw.dropout_weights import WeightTable
from aipw.glm_core import (
    Family,
    build_design,
    check_history_bound,
    fit_ols,
    forward_select,
    predict,
)
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.models import DesignSpec, HistoryDesign, PiCovariate, SelectionMode
from aipw.shared.constants import INTERCEPT, METHOD_BR_STAR, PI_INVERSE_REFERENCE, PI_REFERENCE
from aipw.shared.errors import DesignError, InsufficientDataError

from .completed import CompletedDataset

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


def pi_terms(pi_covariate: PiCovariate, by_design: Sequence[str] = ()) -> tuple[str, ...]:
    """Design terms through which π̂ enters a BR* regression.

    Args:
        pi_covariate: ``PI`` enters π̂, ``INVERSE`` enters π̂⁻¹ and
            ``INVERSE_BY_DESIGN`` adds π̂⁻¹ times each ``by_design`` term.
        by_design: Subject-level estimand design terms.
    """
    if pi_covariate is PiCovariate.PI:
        return (PI_REFERENCE,)
    if pi_covariate is PiCovariate.INVERSE:
        return (PI_INVERSE_REFERENCE,)
    products = tuple(
        f"{PI_INVERSE_REFERENCE}:{term}" for term in by_design if term != INTERCEPT
    )
    return (PI_INVERSE_REFERENCE, *products)


def _depth_design(
    design: HistoryDesign,
    k: int,
    s: int,
    extra: tuple[str, ...],
    namespace: dict[str, FloatArray],
    response: FloatArray,
    selection: SelectionMode,
) -> DesignSpec:
    spec = design.at_depth(s, override_key=f"{k},{s}")
    history = set(design.history_terms(s))
    base = DesignSpec(terms=(*(t for t in spec.terms if t not in history), *extra))
    candidates = [t for t in spec.terms if t in history]
    if selection is SelectionMode.FORWARD and candidates:
        chosen = forward_select(base, candidates, namespace, response, family=Family.GAUSSIAN)
    else:
        chosen = base.extended(*candidates)
    check_history_bound(chosen, s + 1, f"BR* regression ({k},{s})")
    return chosen


def br_star_impute(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    wt: WeightTable,
    design: HistoryDesign,
    k: int,
    *,
    pi_covariate: PiCovariate = PiCovariate.INVERSE,
    selection: SelectionMode = SelectionMode.FORWARD,
    by_design: Sequence[str] = (),
) -> FloatArray:
    """BR* predictions of Yₖ for every subject.

    Args:
        ds: Monotone dataset.
        profile: Its missingness profile.
        wt: Weight table fit on ``ds``.
        design: History design for the outcome regressions (overrides keyed ``"k,s"``).
        k: Target visit, ``2 ≤ k ≤ M``.
        pi_covariate: How π̂ enters each regression.
        selection: ``FORWARD`` selects history terms by AIC; base terms stay.
        by_design: Estimand design terms for ``INVERSE_BY_DESIGN``.

    Returns:
        Length-N vector Ŷₖ.

    Raises:
        InsufficientDataError: A regression has too few subjects.
        DesignError: ``k`` is out of range or a design references data
            beyond its depth.
    """
    wt.check_dataset(ds)
    if not 2 <= k <= ds.n_visits:
        msg = f"target visit {k} outside 2..{ds.n_visits}"
        raise DesignError(msg, {"k": k})
    history = ds.history_namespace()
    last = profile.last_visit
    extra = pi_terms(pi_covariate, by_design)
    current = np.array(ds.outcomes[:, k - 1])

    for s in range(k - 1, 0, -1):
        # π̂ of the visit right after depth s.
        pi_next = wt.pi[:, s]
        namespace = {
            **history,
            PI_REFERENCE: pi_next,
            PI_INVERSE_REFERENCE: np.divide(
                1.0, pi_next, out=np.full(pi_next.shape, np.nan), where=pi_next > 0.0
            ),
        }
        rows = last >= s + 1
        subset = {name: column[rows] for name, column in namespace.items()}
        spec = _depth_design(design, k, s, extra, subset, current[rows], selection)
        x = build_design(spec, namespace)
        try:
            fit = fit_ols(x[rows], current[rows], design=spec)
        except InsufficientDataError as exc:
            msg = f"cannot fit BR* regression ({k},{s}): {exc.message}"
            raise InsufficientDataError(msg, {"k": k, "s": s, **exc.details}) from exc
        reached = last >= s
        current = np.where(reached, np.nan, current)
        current[reached] = predict(fit, x[reached])
        logger.debug("BR* (%d,%d) terms %s", k, s, list(spec.terms))
    return current


def br_star_complete(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    wt: WeightTable,
    design: HistoryDesign,
    *,
    pi_covariate: PiCovariate = PiCovariate.INVERSE,
    selection: SelectionMode = SelectionMode.FORWARD,
    by_design: Sequence[str] = (),
) -> CompletedDataset:
    """Completed dataset with BR* predictions at visits 2..M.

    Visit 1 passes through; every later cell holds the BR* prediction.
    """
    values = np.array(ds.outcomes)
    for k in range(2, ds.n_visits + 1):
        values[:, k - 1] = br_star_impute(
            ds,
            profile,
            wt,
            design,
            k,
            pi_covariate=pi_covariate,
            selection=selection,
            by_design=by_design,
        )
    logger.info("BR* imputation complete for %d subjects", ds.n_subjects)
    return CompletedDataset.from_values(
        ds, profile, values, METHOD_BR_STAR, {"weights": wt.dataset_fingerprint}
    )
