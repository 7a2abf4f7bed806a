"""Pydantic models for CLI runs and the artifacts they write."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from aipw.shared.constants import (
    DEFAULT_ALPHA,
    ESTIMAND_LAST_MEAN,
    INTERCEPT,
    LSMEAN_PREFIX,
    METHOD_AIPW_I,
    SUPPORTED_METHODS,
)

from .design import DesignSpec, HistoryDesign
from .estimation import GeeSpec
from .options import EmptyHazardPolicy, PiCovariate, PositivityMode, SelectionMode
from .schema import DatasetSchema


class RunConfig(BaseModel):
    """Everything one ``impute`` / ``estimate`` run needs.

    Designs left unset are derived from the column mapping: history
    designs use every baseline covariate plus the outcome history, mean
    designs use ``1 + baseline + t`` (plus ``arm:t`` when an arm is named).
    """

    model_config = ConfigDict(frozen=True)

    input: Path | None = Field(default=None, description="Long-format CSV")
    columns: DatasetSchema = Field(default_factory=DatasetSchema)
    method: str = Field(default=METHOD_AIPW_I, description="Method identifier")
    hazard_design: HistoryDesign | None = Field(default=None)
    imputation_design: HistoryDesign | None = Field(default=None)
    mean_design: DesignSpec | None = Field(
        default=None, description="Baseline-and-time design for AIPW-S and MMRM"
    )
    analysis: GeeSpec | None = Field(default=None, description="Estimating-equation model")
    arm: str | None = Field(default=None, description="Arm indicator for LS-mean contrasts")
    lsmean_times: tuple[float, ...] = Field(default=(), description="Times for arm contrasts")
    estimands: tuple[str, ...] = Field(
        default=(), description="Estimands (default: analysis terms, mean_last, LS-mean contrasts)"
    )
    bootstrap: int | None = Field(default=None, ge=2, description="Bootstrap replicates")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Master seed")
    threads: int = Field(default=1, ge=1, description="Parallel workers")
    output: Path = Field(default=Path("out"), description="Output directory")
    fill_gaps: bool = Field(default=False, description="Fill intermittent gaps first")
    positivity: PositivityMode = Field(default=PositivityMode.ERROR)
    positivity_floor: float = Field(default=0.01, gt=0.0, lt=1.0)
    empty_hazards: EmptyHazardPolicy = Field(default=EmptyHazardPolicy.PIN_ZERO)
    hazard_selection: SelectionMode = Field(default=SelectionMode.NONE)
    br_selection: SelectionMode = Field(default=SelectionMode.FORWARD)
    pi_covariate: PiCovariate = Field(default=PiCovariate.INVERSE)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _validate_run(self) -> RunConfig:
        """Check the method name and that the arm is a baseline covariate."""
        if self.method not in SUPPORTED_METHODS:
            msg = f"method must be one of {list(SUPPORTED_METHODS)}, got '{self.method}'"
            raise ValueError(msg)
        if self.arm is not None and self.arm not in self.columns.baseline:
            msg = f"arm '{self.arm}' must be a baseline covariate"
            raise ValueError(msg)
        if self.lsmean_times and self.arm is None:
            msg = "lsmean_times requires an arm covariate"
            raise ValueError(msg)
        return self

    def history_design(self) -> HistoryDesign:
        """Hazard design family (defaults to baseline covariates + outcome history)."""
        return self.hazard_design or HistoryDesign(baseline=self.columns.baseline)

    def sequential_design(self) -> HistoryDesign:
        """Outcome-regression design family for Paik, AIPW-I and BR*."""
        return self.imputation_design or HistoryDesign(
            baseline=self.columns.baseline, time_varying=self.columns.time_varying
        )

    def baseline_time_design(self) -> DesignSpec:
        """Mean design over baseline covariates and time."""
        if self.mean_design is not None:
            return self.mean_design
        extra = (f"{self.arm}:t",) if self.arm is not None else ()
        return DesignSpec(terms=(INTERCEPT, *self.columns.baseline, "t", *extra))

    def analysis_spec(self) -> GeeSpec:
        """Analysis model (defaults to the baseline-and-time design, independence)."""
        return self.analysis or GeeSpec(design=self.baseline_time_design())

    def estimand_names(self) -> tuple[str, ...]:
        """Estimands reported by ``estimate`` and ``report``."""
        if self.estimands:
            return self.estimands
        contrasts = tuple(f"{LSMEAN_PREFIX}{t:g}" for t in self.lsmean_times)
        return (*self.analysis_spec().design.terms, ESTIMAND_LAST_MEAN, *contrasts)


class ArtifactMetadata(BaseModel):
    """Header written next to every artifact set."""

    model_config = ConfigDict(frozen=True)

    package: str = Field(description="Distribution name")
    version: str = Field(description="Package version")
    command: str = Field(description="CLI subcommand")
    seed: int = Field(description="Master seed")
    config_hash: str = Field(description="Hash of the effective configuration")
    switches: dict[str, Any] = Field(
        default_factory=dict, description="Design-decision switches in effect"
    )
    artifacts: tuple[str, ...] = Field(default=(), description="Files written, in order")


class ErrorPayload(BaseModel):
    """Machine-readable error written on non-zero exit."""

    code: str = Field(description="Stable error code")
    category: str = Field(description="validation | convergence | generic")
    message: str = Field(description="Human-readable message")
    details: dict[str, Any] = Field(default_factory=dict)
    exit_code: int = Field(description="Process exit code")
