"""Normal-theory confidence intervals and the interval score."""

from __future__ import annotations

from scipy import stats

from aipw.models import IntervalEstimate
from aipw.shared.errors import ModelSpecificationError


def normal_ci(point: float, se: float, level: float = 0.95) -> IntervalEstimate:
    """``point ± z₁₋α/₂ · se``.

    Raises:
        ModelSpecificationError: ``level`` outside (0, 1) or negative ``se``.
    """
    if not 0.0 < level < 1.0:
        msg = f"confidence level must lie in (0, 1), got {level}"
        raise ModelSpecificationError(msg, {"level": level})
    if se < 0.0:
        msg = f"standard error must be non-negative, got {se}"
        raise ModelSpecificationError(msg, {"se": se})
    half_width = float(stats.norm.ppf(0.5 + level / 2.0)) * se
    return IntervalEstimate(
        point=point, se=se, lower=point - half_width, upper=point + half_width, level=level
    )


def interval_score(lower: float, upper: float, truth: float, alpha: float) -> float:
    """Width plus ``2/α`` times the distance by which ``truth`` misses the interval."""
    penalty = 0.0
    if truth < lower:
        penalty = lower - truth
    elif truth > upper:
        penalty = truth - upper
    return (upper - lower) + (2.0 / alpha) * penalty
