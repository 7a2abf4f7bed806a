"""Synthetic data, dropout mechanisms, the correctness grid and its metrics."""

from .generator import (
    FullData,
    analytic_truth,
    apply_dropout,
    generate_full,
    subject_ids,
    true_values_oracle,
)
from .metrics import METRICS_COLUMNS, MetricsReport, metrics
from .runner import RAW_COLUMNS, ScenarioResult, run_grid, run_scenario
from .scenarios import ANALYSIS_DESIGN, ARM_COVARIATE, cell_plan
from .trial import TRIAL_ARM, TRIAL_DESIGN, generate_trial, trial_plan, trial_truth

__all__ = [
    "ANALYSIS_DESIGN",
    "ARM_COVARIATE",
    "METRICS_COLUMNS",
    "RAW_COLUMNS",
    "TRIAL_ARM",
    "TRIAL_DESIGN",
    "FullData",
    "MetricsReport",
    "ScenarioResult",
    "analytic_truth",
    "apply_dropout",
    "cell_plan",
    "generate_full",
    "generate_trial",
    "metrics",
    "run_grid",
    "run_scenario",
    "subject_ids",
    "trial_plan",
    "trial_truth",
]
