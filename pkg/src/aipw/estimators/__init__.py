"""Estimating-equation and likelihood solvers: GEE, WGEE, MMRM and contrasts."""

from .contrasts import contrast_vector, lsmean_diff, mean_at_visit
from .gee import GeeFit, fit_gee, fit_wgee
from .mmrm import MmrmFit, fit_mmrm

__all__ = [
    "GeeFit",
    "MmrmFit",
    "contrast_vector",
    "fit_gee",
    "fit_mmrm",
    "fit_wgee",
    "lsmean_diff",
    "mean_at_visit",
]
