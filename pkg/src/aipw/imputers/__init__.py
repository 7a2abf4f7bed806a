"""Completed-data constructors: Paik, AIPW-I, AIPW-S and BR*."""

from .aipw import aipw_i_impute, aipw_s_impute
from .bang_robins import br_star_complete, br_star_impute, pi_terms
from .baseline_time import BaselineTimeModel, fit_baseline_time_model
from .completed import COMPARISON_COLUMNS, CompletedDataset, compare_completed
from .paik import SequentialModelArray, paik_impute, sequential_design

__all__ = [
    "COMPARISON_COLUMNS",
    "BaselineTimeModel",
    "CompletedDataset",
    "SequentialModelArray",
    "aipw_i_impute",
    "aipw_s_impute",
    "br_star_complete",
    "br_star_impute",
    "compare_completed",
    "fit_baseline_time_model",
    "paik_impute",
    "pi_terms",
    "sequential_design",
]
