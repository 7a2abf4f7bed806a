"""Shared utilities: error hierarchy, constants, progress protocols, seeding."""

from .errors import (
    AipwError,
    BootstrapFailureError,
    ConvergenceError,
    DataValidationError,
    DesignError,
    DuplicateRowError,
    EstimationError,
    FingerprintMismatchError,
    GapFillError,
    InsufficientDataError,
    MissingBaselineError,
    MissingCovariateError,
    ModelSpecificationError,
    NonMonotoneError,
    PositivityError,
    SchemaError,
    SeparationError,
    SingleClassError,
    SingularCovarianceError,
)
from .protocols import LoggingReporter, NoOpReporter, ProgressReporter
from .seeding import child_rng, child_seed, config_hash

__all__ = [
    "AipwError",
    "BootstrapFailureError",
    "ConvergenceError",
    "DataValidationError",
    "DesignError",
    "DuplicateRowError",
    "EstimationError",
    "FingerprintMismatchError",
    "GapFillError",
    "InsufficientDataError",
    "LoggingReporter",
    "MissingBaselineError",
    "MissingCovariateError",
    "ModelSpecificationError",
    "NoOpReporter",
    "NonMonotoneError",
    "PositivityError",
    "ProgressReporter",
    "SchemaError",
    "SeparationError",
    "SingleClassError",
    "SingularCovarianceError",
    "child_rng",
    "child_seed",
    "config_hash",
]
