"""Pydantic models for estimation and inference settings and outputs."""

from __future__ import annotations

from math import isclose
from typing import Final, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats

from .design import DesignSpec
from .options import MomentDenominator, WorkingCorrelation

_WIDTH_TOLERANCE: Final = 1e-9


class GeeSpec(BaseModel):
    """Mean model and working correlation for a GEE fit."""

    model_config = ConfigDict(frozen=True)

    design: DesignSpec = Field(description="Long-format mean design")
    link: Literal["identity"] = Field(default="identity", description="Link function")
    correlation: WorkingCorrelation = Field(
        default=WorkingCorrelation.INDEPENDENCE, description="Working correlation structure"
    )
    denominator: MomentDenominator = Field(
        default=MomentDenominator.SUBJECTS,
        description="Divide moment estimates by N subjects or by contributing cells and pairs",
    )


class BootstrapPlan(BaseModel):
    """Nonparametric subject-level bootstrap recipe."""

    model_config = ConfigDict(frozen=True)

    replicates: int = Field(default=300, ge=2, description="Replicate count B")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Master seed")
    max_failure_fraction: float = Field(
        default=0.10, ge=0.0, le=1.0, description="Refuse results above this failure share"
    )
    threads: int = Field(default=1, ge=1, description="Parallel workers")
    pipeline: str = Field(default="", description="Label of the re-fitted pipeline")


class IntervalEstimate(BaseModel):
    """Normal-theory confidence interval."""

    model_config = ConfigDict(frozen=True)

    point: float = Field(description="Point estimate")
    se: float = Field(ge=0.0, description="Standard error")
    lower: float = Field(description="Lower bound")
    upper: float = Field(description="Upper bound")
    level: float = Field(gt=0.0, lt=1.0, description="Confidence level 1 - alpha")

    @model_validator(mode="after")
    def _validate_bounds(self) -> IntervalEstimate:
        """Verify lower <= upper and width = 2 z se."""
        if self.lower > self.upper:
            msg = f"lower ({self.lower}) must not exceed upper ({self.upper})"
            raise ValueError(msg)
        z = float(stats.norm.ppf(0.5 + self.level / 2.0))
        expected = 2.0 * z * self.se
        width = self.upper - self.lower
        if not isclose(width, expected, rel_tol=_WIDTH_TOLERANCE, abs_tol=_WIDTH_TOLERANCE):
            msg = f"interval width {width} must equal 2*z*se = {expected}"
            raise ValueError(msg)
        return self

    def covers(self, truth: float) -> bool:
        """Whether the closed interval contains ``truth``."""
        return self.lower <= truth <= self.upper
