"""Pydantic model for the long-format CSV column mapping."""

from __future__ import annotations

import re
from typing import Final

from pydantic import BaseModel, ConfigDict, Field, model_validator

from aipw.shared.constants import (
    PI_INVERSE_REFERENCE,
    PI_REFERENCE,
    TIME_REFERENCE,
    TIME_VARYING_SEPARATOR,
)

_RESERVED_PATTERN: Final = re.compile(r"^(y\d+|visit\d+)$")
_RESERVED_NAMES: Final = frozenset({TIME_REFERENCE, PI_REFERENCE, PI_INVERSE_REFERENCE, "1"})


class DatasetSchema(BaseModel):
    """Maps CSV columns onto the longitudinal panel."""

    model_config = ConfigDict(frozen=True)

    subject: str = Field(default="subject_id", description="Subject identifier column")
    visit: str = Field(default="visit", description="Visit time-code column")
    outcome: str = Field(default="y", description="Outcome column")
    baseline: tuple[str, ...] = Field(default=(), description="Baseline covariate columns")
    time_varying: tuple[str, ...] = Field(
        default=(), description="Covariates measured at every visit"
    )
    group: str | None = Field(default=None, description="Optional group label column")

    @model_validator(mode="after")
    def _validate_columns(self) -> DatasetSchema:
        """Reject duplicate columns and covariate names that clash with design references."""
        columns = [self.subject, self.visit, self.outcome, *self.baseline, *self.time_varying]
        if self.group is not None:
            columns.append(self.group)
        if len(set(columns)) != len(columns):
            msg = f"schema columns must be distinct: {columns}"
            raise ValueError(msg)
        for name in (*self.baseline, *self.time_varying):
            if (
                name in _RESERVED_NAMES
                or _RESERVED_PATTERN.match(name)
                or ":" in name
                or TIME_VARYING_SEPARATOR in name
            ):
                msg = f"covariate name '{name}' clashes with a reserved design reference"
                raise ValueError(msg)
        return self

    @property
    def covariates(self) -> tuple[str, ...]:
        """Baseline then time-varying covariate columns."""
        return (*self.baseline, *self.time_varying)
