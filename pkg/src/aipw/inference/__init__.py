"""Bootstrap standard errors, normal-theory intervals and interval scoring."""

from .bootstrap import REPLICATE_COLUMNS, BootstrapResult, Pipeline, bootstrap
from .intervals import interval_score, normal_ci

__all__ = [
    "REPLICATE_COLUMNS",
    "BootstrapResult",
    "Pipeline",
    "bootstrap",
    "interval_score",
    "normal_ci",
]
