"""Greedy forward selection under an information criterion."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from aipw.models import DesignSpec
from aipw.shared.errors import EstimationError, InsufficientDataError

from .design import Namespace, build_design
from .regression import fit_logistic, fit_ols

logger = logging.getLogger(__name__)

_RSS_FLOOR = 1e-300
_IMPROVEMENT_SLACK = 1e-10


class Family(StrEnum):
    """Response family of the regression being selected."""

    GAUSSIAN = "gaussian"
    BINOMIAL = "binomial"


class InformationCriterion(StrEnum):
    """Penalized-deviance criterion."""

    AIC = "aic"
    BIC = "bic"


def information_criterion(
    spec: DesignSpec,
    namespace: Namespace,
    y: npt.ArrayLike,
    *,
    family: Family = Family.GAUSSIAN,
    criterion: InformationCriterion = InformationCriterion.AIC,
) -> float:
    """Deviance plus penalty for one design.

    Gaussian deviance is ``n log(RSS/n)``; binomial deviance is ``-2 log L``.
    The penalty counts estimated (non-aliased) coefficients.

    Args:
        spec: Candidate design.
        namespace: Column source for the design.
        y: Response.
        family: Response family.
        criterion: AIC (penalty 2) or BIC (penalty log n).

    Returns:
        Criterion value (lower is better).
    """
    x = build_design(spec, namespace)
    yv = np.asarray(y, dtype=float)
    n = yv.shape[0]
    penalty = 2.0 if criterion is InformationCriterion.AIC else math.log(n)
    if family is Family.GAUSSIAN:
        fit = fit_ols(x, yv, design=spec)
        deviance = n * math.log(max(fit.rss, _RSS_FLOOR) / n)
        return deviance + penalty * fit.rank
    logit = fit_logistic(x, yv, design=spec)
    return -2.0 * logit.log_likelihood + penalty * logit.rank


def forward_select(
    base: DesignSpec,
    candidates: Sequence[str],
    namespace: Namespace,
    y: npt.ArrayLike,
    *,
    family: Family = Family.GAUSSIAN,
    criterion: InformationCriterion = InformationCriterion.AIC,
) -> DesignSpec:
    """Add candidate terms greedily while the criterion strictly improves.

    Ties between candidates are broken by their order in ``candidates``.
    Candidates whose fit fails (separation, non-convergence) are skipped.

    Args:
        base: Terms that are always kept.
        candidates: Terms eligible for addition.
        namespace: Column source for all terms.
        y: Response.
        family: Response family.
        criterion: Selection criterion.

    Returns:
        ``base`` extended by the selected terms, in selection order.
    """
    current = base
    current_score = information_criterion(
        current, namespace, y, family=family, criterion=criterion
    )
    remaining = [term for term in candidates if term not in base.terms]
    while remaining:
        best_term: str | None = None
        best_score = current_score
        for term in remaining:
            try:
                score = information_criterion(
                    current.extended(term), namespace, y, family=family, criterion=criterion
                )
            except (EstimationError, InsufficientDataError) as exc:
                logger.debug("Skipping candidate %s: %s", term, exc)
                continue
            if score < best_score - _IMPROVEMENT_SLACK:
                best_term, best_score = term, score
        if best_term is None:
            break
        current = current.extended(best_term)
        current_score = best_score
        remaining.remove(best_term)
    logger.debug("Forward selection chose %s", list(current.terms))
    return current
