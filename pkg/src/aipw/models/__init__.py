"""
Shared models for all packages.

Pydantic models for configuration, design specifications and artifacts,
plus the enumerated switches. All models are re-exported here.
"""

from .design import (
    DesignSpec,
    HistoryDesign,
    outcome_reference,
    reference_visit,
    term_parts,
    time_varying_reference,
)
from .estimation import BootstrapPlan, GeeSpec, IntervalEstimate
from .options import (
    Construct,
    EmptyHazardPolicy,
    MomentDenominator,
    PiCovariate,
    PositivityMode,
    SelectionMode,
    Specification,
    SummaryStratum,
    WorkingCorrelation,
)
from .run import ArtifactMetadata, ErrorPayload, RunConfig
from .schema import DatasetSchema
from .simulation import (
    DropoutConfig,
    GeneratorConfig,
    MetricsRow,
    ScenarioCell,
    ScenarioConfig,
    TrialConfig,
    VisitDropout,
)

__all__ = [
    "ArtifactMetadata",
    "BootstrapPlan",
    "Construct",
    "DatasetSchema",
    "DesignSpec",
    "DropoutConfig",
    "EmptyHazardPolicy",
    "ErrorPayload",
    "GeeSpec",
    "GeneratorConfig",
    "HistoryDesign",
    "IntervalEstimate",
    "MetricsRow",
    "MomentDenominator",
    "PiCovariate",
    "PositivityMode",
    "RunConfig",
    "ScenarioCell",
    "ScenarioConfig",
    "SelectionMode",
    "Specification",
    "SummaryStratum",
    "TrialConfig",
    "VisitDropout",
    "WorkingCorrelation",
    "outcome_reference",
    "reference_visit",
    "term_parts",
    "time_varying_reference",
]
