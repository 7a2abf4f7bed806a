"""Pydantic models for the synthetic generators, scenario grid and metrics.

Defaults reproduce the linear mixed-effects generator with two baseline
covariates (x1 continuous, x2 a treatment indicator) and the moderate
dropout construct.
"""

from __future__ import annotations

import math
from typing import Final

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from aipw.shared.constants import (
    DEFAULT_ALPHA,
    DEFAULT_REPEATS,
    DEFAULT_SIM_BOOTSTRAP,
    DEFAULT_SIM_SUBJECTS,
    ORACLE_SUBJECTS,
    SCENARIO_ESTIMANDS,
    SCENARIO_METHOD_ORDER,
    SUPPORTED_METHODS,
)

from .options import Construct, PiCovariate, Specification

_PSD_TOLERANCE: Final = 1e-12

# Hazard coefficients (intercept, history..., arm) per construct
_MODERATE: Final = ((-7.625, (0.5,), 2.0), (-5.225, (0.1, 0.2), 4.0))
_EXTREME: Final = ((-7.0, (0.5,), 1.0), (-4.5, (0.1, 0.2), 2.0))

# ── Generator ────────────────────────────────────────────────────────────


class GeneratorConfig(BaseModel):
    """Random intercept-and-slope generator for the full (pre-dropout) data."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(default=DEFAULT_SIM_SUBJECTS, ge=1, description="Subjects")
    time_codes: tuple[float, ...] = Field(default=(0.0, 1.0, 2.0), description="Visit times")
    beta: tuple[float, float, float, float] = Field(
        default=(0.5, 2.0, -0.25, -6.0),
        description="Fixed effects: intercept, x1, x2, x2*t",
    )
    random_effect_mean: tuple[float, float] = Field(
        default=(1.0, 6.0), description="Mean of (b0, b1)"
    )
    random_effect_cov: tuple[tuple[float, float], tuple[float, float]] = Field(
        default=((0.3, 0.1), (0.1, 0.2)), description="Covariance of (b0, b1)"
    )
    residual_sd: float = Field(default=1.0, ge=0.0, description="Residual SD")
    x1_mean: float = Field(default=5.0, description="Mean of x1")
    x1_sd: float = Field(default=1.0, ge=0.0, description="SD of x1")
    x2_prob: float = Field(default=0.5, ge=0.0, le=1.0, description="P(x2 = 1)")

    @model_validator(mode="after")
    def _validate_shapes(self) -> GeneratorConfig:
        """Require increasing time codes and a symmetric PSD random-effect covariance."""
        if len(self.time_codes) < 2:  # noqa: PLR2004
            msg = "at least two visits are required"
            raise ValueError(msg)
        if any(b <= a for a, b in zip(self.time_codes, self.time_codes[1:], strict=False)):
            msg = f"time_codes must be strictly increasing: {self.time_codes}"
            raise ValueError(msg)
        cov = np.asarray(self.random_effect_cov, dtype=float)
        if not np.allclose(cov, cov.T):
            msg = "random_effect_cov must be symmetric"
            raise ValueError(msg)
        if np.linalg.eigvalsh(cov).min() < -_PSD_TOLERANCE:
            msg = "random_effect_cov must be positive semi-definite"
            raise ValueError(msg)
        return self

    @property
    def n_visits(self) -> int:
        """Number of visits M."""
        return len(self.time_codes)


# ── Dropout ──────────────────────────────────────────────────────────────


class VisitDropout(BaseModel):
    """Hazard logit at one visit: intercept + Σ history·y − arm·x2."""

    model_config = ConfigDict(frozen=True)

    intercept: float = Field(description="Logit intercept (may be -inf for no dropout)")
    history: tuple[float, ...] = Field(description="Coefficients on y1..y(j-1)")
    arm: float = Field(default=0.0, description="Coefficient subtracted per unit of x2")


class DropoutConfig(BaseModel):
    """Sequential logistic dropout for visits 2..M."""

    model_config = ConfigDict(frozen=True)

    construct_kind: Construct = Field(
        default=Construct.MODERATE, alias="construct", description="Construct label"
    )
    visits: tuple[VisitDropout, ...] = Field(description="Hazard logits for visits 2..M")

    @model_validator(mode="after")
    def _validate_history_lengths(self) -> DropoutConfig:
        """Visit j's logit may only use y1..y(j-1)."""
        for index, visit in enumerate(self.visits):
            if len(visit.history) > index + 1:
                msg = f"dropout at visit {index + 2} references future outcomes"
                raise ValueError(msg)
        return self

    @classmethod
    def for_construct(cls, construct: Construct) -> DropoutConfig:
        """Build the moderate or extreme mechanism."""
        table = {Construct.MODERATE: _MODERATE, Construct.EXTREME: _EXTREME}.get(construct)
        if table is None:
            msg = f"no built-in coefficients for construct '{construct}'"
            raise ValueError(msg)
        visits = tuple(
            VisitDropout(intercept=intercept, history=history, arm=arm)
            for intercept, history, arm in table
        )
        return cls(construct=construct, visits=visits)

    @classmethod
    def none(cls, n_visits: int) -> DropoutConfig:
        """Mechanism with no dropout at any visit."""
        visits = tuple(
            VisitDropout(intercept=-math.inf, history=()) for _ in range(n_visits - 1)
        )
        return cls(construct=Construct.CUSTOM, visits=visits)


# ── Scenario grid ────────────────────────────────────────────────────────


class ScenarioCell(BaseModel):
    """One cell of the Y-model × P-model correctness grid."""

    model_config = ConfigDict(frozen=True)

    y_model: Specification = Field(description="Outcome / imputation model correctness")
    p_model: Specification = Field(description="Dropout model correctness")

    @property
    def label(self) -> str:
        """Compact label such as ``Y+P-``."""
        y_sign = "+" if self.y_model is Specification.CORRECT else "-"
        p_sign = "+" if self.p_model is Specification.CORRECT else "-"
        return f"Y{y_sign}P{p_sign}"

    @classmethod
    def grid(cls) -> tuple[ScenarioCell, ...]:
        """All four cells in table order."""
        return tuple(
            cls(y_model=y, p_model=p)
            for y in (Specification.CORRECT, Specification.INCORRECT)
            for p in (Specification.CORRECT, Specification.INCORRECT)
        )


class ScenarioConfig(BaseModel):
    """Monte Carlo study settings."""

    model_config = ConfigDict(frozen=True)

    construct_kind: Construct = Field(
        default=Construct.MODERATE, alias="construct", description="Dropout construct"
    )
    dropout: DropoutConfig | None = Field(
        default=None, description="Explicit mechanism (overrides construct)"
    )
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    cells: tuple[ScenarioCell, ...] = Field(default_factory=ScenarioCell.grid)
    methods: tuple[str, ...] = Field(default=SCENARIO_METHOD_ORDER, description="Methods")
    estimands: tuple[str, ...] = Field(default=SCENARIO_ESTIMANDS, description="Estimands")
    repeats: int = Field(default=DEFAULT_REPEATS, ge=1, description="Monte Carlo repeats")
    bootstrap: int = Field(default=DEFAULT_SIM_BOOTSTRAP, ge=2, description="Replicates B")
    seed: int = Field(default=20_240_501, ge=0, lt=2**64, description="Master seed")
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0, lt=1.0, description="CI alpha")
    threads: int = Field(default=1, ge=1, description="Parallel repeats")
    oracle_subjects: int = Field(default=ORACLE_SUBJECTS, ge=1, description="Oracle n")
    pi_covariate: PiCovariate = Field(default=PiCovariate.INVERSE, description="BR* form")
    max_standard_error: float | None = Field(
        default=None, gt=0.0, description="Exclude repeats whose bootstrap SE exceeds this"
    )

    @model_validator(mode="after")
    def _validate_methods(self) -> ScenarioConfig:
        """Methods must be known; estimands must be the scenario estimands."""
        unknown = [m for m in self.methods if m not in SUPPORTED_METHODS]
        if unknown:
            msg = f"unknown methods: {unknown}"
            raise ValueError(msg)
        bad = [e for e in self.estimands if e not in SCENARIO_ESTIMANDS]
        if bad:
            msg = f"unknown estimands: {bad}"
            raise ValueError(msg)
        return self

    def mechanism(self) -> DropoutConfig:
        """The dropout mechanism in effect."""
        return self.dropout or DropoutConfig.for_construct(self.construct_kind)


# ── Metrics ──────────────────────────────────────────────────────────────


class MetricsRow(BaseModel):
    """Monte Carlo performance of one method for one estimand."""

    model_config = ConfigDict(frozen=True)

    cell: str = Field(default="", description="Scenario cell label")
    method: str = Field(description="Method identifier")
    estimand: str = Field(description="Estimand label")
    truth: float = Field(description="Oracle truth")
    bias: float = Field(description="mean(est) - truth")
    rmse: float = Field(description="Root mean squared error")
    ints: float = Field(description="Mean interval score")
    covp: float = Field(description="Coverage probability (NaN when undefined)")
    mcsd: float = Field(description="Sample SD of estimates (NaN for one repeat)")
    avese: float = Field(description="Mean standard error")
    repeats: int = Field(ge=0, description="Repeats contributing")
    failures: int = Field(ge=0, description="Failed or excluded repeats")
    flags: tuple[str, ...] = Field(default=(), description="Quality flags")

    @model_validator(mode="after")
    def _validate_coverage(self) -> MetricsRow:
        """CovP must lie in [0, 1] when defined."""
        if not math.isnan(self.covp) and not 0.0 <= self.covp <= 1.0:
            msg = f"covp must be within [0, 1], got {self.covp}"
            raise ValueError(msg)
        return self


# ── Trial-shaped generator ───────────────────────────────────────────────


class TrialConfig(BaseModel):
    """Two-arm trial with change-from-baseline outcomes and differential dropout.

    Visits at 0/12/24/36 months are coded in years. Hazard logits per visit
    and arm are ``intercept + history_coef * y(j-1)``; defaults give roughly
    32% (placebo) and 43% (active) dropout by the last visit.
    """

    model_config = ConfigDict(frozen=True)

    n_per_arm: int = Field(default=250, ge=2, description="Subjects per arm")
    time_codes: tuple[float, ...] = Field(default=(0.0, 1.0, 2.0, 3.0))
    score_mean: float = Field(default=1.8, description="Baseline score mean")
    score_sd: float = Field(default=0.8, ge=0.0, description="Baseline score SD")
    slope: float = Field(default=0.6, description="Placebo change per year")
    arm_slope: float = Field(default=-0.05, description="Active minus placebo slope")
    score_slope: float = Field(default=0.25, description="Slope per baseline-score unit")
    slope_sd: float = Field(default=0.8, ge=0.0, description="Random slope SD")
    residual_sd: float = Field(default=0.5, ge=0.0, description="Residual SD at every visit")
    placebo_intercepts: tuple[float, ...] = Field(default=(-1.614, -2.35, -4.49))
    active_intercepts: tuple[float, ...] = Field(default=(-1.046, -2.74, -3.14))
    history_coef: float = Field(default=1.0, description="Hazard log-odds per unit y(j-1)")

    @model_validator(mode="after")
    def _validate_lengths(self) -> TrialConfig:
        """One hazard intercept per post-baseline visit and arm."""
        expected = len(self.time_codes) - 1
        if len(self.placebo_intercepts) != expected or len(self.active_intercepts) != expected:
            msg = f"expected {expected} hazard intercepts per arm"
            raise ValueError(msg)
        return self
