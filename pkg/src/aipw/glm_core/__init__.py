"""Regression engine: design matrices, OLS, logistic IRLS, prediction, selection."""

from .design import Namespace, build_design, check_history_bound
from .regression import (
    LinearModelFit,
    LogisticModelFit,
    fit_logistic,
    fit_ols,
    independent_columns,
    predict,
)
from .selection import Family, InformationCriterion, forward_select, information_criterion

__all__ = [
    "Family",
    "InformationCriterion",
    "LinearModelFit",
    "LogisticModelFit",
    "Namespace",
    "build_design",
    "check_history_bound",
    "fit_logistic",
    "fit_ols",
    "forward_select",
    "independent_columns",
    "information_criterion",
    "predict",
]
