"""Dropout hazard models, observation probabilities and AIPW visit coefficients."""

from .hazards import HazardModelSet, fit_hazards, predict_hazards
from .weights import (
    WeightTable,
    aipw_coefficient_matrix,
    aipw_visit_coefficients,
    compute_weights,
    weights_frame,
)

__all__ = [
    "HazardModelSet",
    "WeightTable",
    "aipw_coefficient_matrix",
    "aipw_visit_coefficients",
    "compute_weights",
    "fit_hazards",
    "predict_hazards",
    "weights_frame",
]
