"""Method pipelines from raw panel to named estimates, and the trial report."""

from .methods import (
    MethodPipeline,
    MethodPlan,
    MethodResult,
    check_estimands,
    estimate_completed,
    evaluate_methods,
    impute,
    lsmean_estimand,
    model_standard_errors,
    run_method,
)
from .trial import AVAILABLE_CASE, REPORT_COLUMNS, TRIAL_METHODS, analyze_trial

__all__ = [
    "AVAILABLE_CASE",
    "REPORT_COLUMNS",
    "TRIAL_METHODS",
    "MethodPipeline",
    "MethodPlan",
    "MethodResult",
    "analyze_trial",
    "check_estimands",
    "estimate_completed",
    "evaluate_methods",
    "impute",
    "lsmean_estimand",
    "model_standard_errors",
    "run_method",
]
