"""Longitudinal panel: data model, CSV ingestion, monotone validation, gap filling, summaries."""

from .dataset import LongitudinalDataset
from .gaps import fill_intermediate_gaps
from .io import (
    PROVENANCE_COLUMN,
    export_long_csv,
    ingest_completed_csv,
    ingest_long_csv,
    to_long_frame,
    write_csv,
)
from .profile import (
    MissingnessProfile,
    find_nonmonotone_subjects,
    intermittent_gaps,
    validate_monotone,
)
from .summary import available_case_difference, summarize

__all__ = [
    "PROVENANCE_COLUMN",
    "LongitudinalDataset",
    "MissingnessProfile",
    "available_case_difference",
    "export_long_csv",
    "fill_intermediate_gaps",
    "find_nonmonotone_subjects",
    "ingest_completed_csv",
    "ingest_long_csv",
    "intermittent_gaps",
    "summarize",
    "to_long_frame",
    "validate_monotone",
    "write_csv",
]
