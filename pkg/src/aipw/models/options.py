"""Enumerated switches used as keyword options across the packages.

Every design-decision switch that changes results is an enum so it can be
recorded verbatim in artifact metadata.
"""

from enum import StrEnum


class WorkingCorrelation(StrEnum):
    """GEE working correlation structure."""

    INDEPENDENCE = "independence"
    EXCHANGEABLE = "exchangeable"
    UNSTRUCTURED = "unstructured"


class MomentDenominator(StrEnum):
    """Divisor of the working-correlation moment estimates."""

    SUBJECTS = "subjects"
    CONTRIBUTING = "contributing"


class PositivityMode(StrEnum):
    """What to do when an observation probability falls below the floor."""

    ERROR = "error"
    TRUNCATE = "truncate"


class PiCovariate(StrEnum):
    """How the observation probability enters the BR* regressions."""

    PI = "pi"
    INVERSE = "inverse"
    INVERSE_BY_DESIGN = "inverse_by_design"


class SelectionMode(StrEnum):
    """Variable selection applied inside a regression step."""

    NONE = "none"
    FORWARD = "forward"


class EmptyHazardPolicy(StrEnum):
    """Handling of a visit with no dropout events among those at risk."""

    ERROR = "error"
    PIN_ZERO = "pin_zero"


class SummaryStratum(StrEnum):
    """Row grouping for descriptive summaries."""

    NONE = "none"
    GROUP = "group"
    COMPLETION = "completion"


class Specification(StrEnum):
    """Whether a working model in the scenario grid is correctly specified."""

    CORRECT = "correct"
    INCORRECT = "incorrect"


class Construct(StrEnum):
    """Named dropout-mechanism strength."""

    MODERATE = "moderate"
    EXTREME = "extreme"
    CUSTOM = "custom"
