"""Working-model designs for each cell of the correctness grid.

Correct models carry the treatment indicator ``x2`` (and its time
interaction where the model has time); incorrect models omit both.

=========  =========================  =====================
Model      correct                    incorrect
=========  =========================  =====================
hazard     x2 + history               history
outcome    x1 + x2 + history          x1 + history
mean       1 + x1 + x2 + t + x2:t     1 + x1 + t
=========  =========================  =====================
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Final

from aipw.models import (
    DesignSpec,
    GeeSpec,
    HistoryDesign,
    PiCovariate,
    PositivityMode,
    ScenarioCell,
    Specification,
    WorkingCorrelation,
)
from aipw.pipeline import MethodPlan
from aipw.shared.constants import SCENARIO_ESTIMANDS

ARM_COVARIATE: Final = "x2"
CONTINUOUS_COVARIATE: Final = "x1"

ANALYSIS_DESIGN: Final = DesignSpec.parse("1 + x1 + x2 + t + x2:t")
_MISSPECIFIED_MEAN: Final = ANALYSIS_DESIGN.without(ARM_COVARIATE)


def cell_plan(
    cell: ScenarioCell,
    *,
    estimands: Sequence[str] = SCENARIO_ESTIMANDS,
    pi_covariate: PiCovariate = PiCovariate.INVERSE,
) -> MethodPlan:
    """Working models every method uses in one grid cell.

    Completed data are always analysed with the correct model; MMRM, WGEE
    and GEE-IND use the cell's mean design as their own model.
    """
    y_correct = cell.y_model is Specification.CORRECT
    p_correct = cell.p_model is Specification.CORRECT
    outcome_baseline = (
        (CONTINUOUS_COVARIATE, ARM_COVARIATE) if y_correct else (CONTINUOUS_COVARIATE,)
    )
    mean = ANALYSIS_DESIGN if y_correct else _MISSPECIFIED_MEAN
    return MethodPlan(
        hazard=HistoryDesign(baseline=(ARM_COVARIATE,) if p_correct else ()),
        outcome=HistoryDesign(baseline=outcome_baseline),
        mean=mean,
        mmrm=mean,
        analysis=GeeSpec(design=ANALYSIS_DESIGN),
        gee=GeeSpec(design=mean),
        wgee=GeeSpec(design=mean, correlation=WorkingCorrelation.UNSTRUCTURED),
        estimands=tuple(estimands),
        arm=ARM_COVARIATE,
        positivity=PositivityMode.ERROR,
        pi_covariate=pi_covariate,
    )
