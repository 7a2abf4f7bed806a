"""Typed error hierarchy shared by every package.

Library code raises these; only ``cli.main`` converts them into exit codes
and machine-readable error payloads. Each class carries a stable ``code``
and the exit code of its category.
"""

from __future__ import annotations

from collections.abc import Mapping
from typing import Any, ClassVar, Final

EXIT_OK: Final = 0
EXIT_VALIDATION: Final = 2
EXIT_ESTIMATION: Final = 3


class AipwError(Exception):
    """Base class for all domain errors.

    Args:
        message: Human-readable description.
        details: Optional structured context (offending subjects, indices, counts).
    """

    code: ClassVar[str] = "aipw_error"
    category: ClassVar[str] = "generic"
    exit_code: ClassVar[int] = 1

    def __init__(self, message: str, details: Mapping[str, Any] | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.details: dict[str, Any] = dict(details or {})


# ── Data validation (exit 2) ────────────────────────────────────────────


class DataValidationError(AipwError):
    """Input data violates a structural requirement."""

    code = "data_validation"
    category = "validation"
    exit_code = EXIT_VALIDATION


class SchemaError(DataValidationError):
    """Declared schema does not match the CSV."""

    code = "schema"


class DuplicateRowError(DataValidationError):
    """A (subject, visit) pair appears more than once."""

    code = "duplicate_row"


class MissingBaselineError(DataValidationError):
    """A subject has no observed outcome at the first visit."""

    code = "missing_baseline"


class MissingCovariateError(DataValidationError):
    """A covariate is missing while the subject is on study."""

    code = "missing_covariate"


class NonMonotoneError(DataValidationError):
    """Intermittent missing outcomes were found and gap filling was not requested."""

    code = "non_monotone"


class GapFillError(DataValidationError):
    """An intermittent gap cannot be filled."""

    code = "gap_fill"


class InsufficientDataError(DataValidationError):
    """Too few usable rows to fit a required regression."""

    code = "insufficient_data"


# ── Model specification (exit 2) ────────────────────────────────────────


class ModelSpecificationError(AipwError):
    """A model design or linkage is inconsistent with the data."""

    code = "model_specification"
    category = "validation"
    exit_code = EXIT_VALIDATION


class DesignError(ModelSpecificationError):
    """A design term is unknown, references future data or is not allowed here."""

    code = "design"


class FingerprintMismatchError(ModelSpecificationError):
    """Fitted models were built on a different dataset."""

    code = "fingerprint_mismatch"


# ── Estimation (exit 3) ─────────────────────────────────────────────────


class EstimationError(AipwError):
    """A numerical fit failed."""

    code = "estimation"
    category = "convergence"
    exit_code = EXIT_ESTIMATION


class ConvergenceError(EstimationError):
    """An iterative solver hit its iteration cap."""

    code = "convergence"


class SeparationError(EstimationError):
    """Logistic regression coefficients diverge (complete separation)."""

    code = "separation"


class SingleClassError(EstimationError):
    """Binary response has only one class."""

    code = "single_class"


class SingularCovarianceError(EstimationError):
    """A working or residual covariance matrix is not positive definite."""

    code = "singular_covariance"


class PositivityError(EstimationError):
    """Observation probabilities fall below the positivity floor."""

    code = "positivity"


class BootstrapFailureError(EstimationError):
    """Too many bootstrap replicates failed."""

    code = "bootstrap_failure"
