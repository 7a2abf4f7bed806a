"""One analysis pipeline per method, from raw panel to named estimates.

Imputation methods (Paik, AIPW-I, AIPW-S, BR*) complete the data and
solve the analysis GEE on it. MMRM, WGEE and available-case GEE report
their own fit. Estimand names are:

- ``mean_last``: mean outcome at the last visit
- ``lsmean@<time>``: model-adjusted arm difference at ``time``
- anything else: a coefficient of the analysis (or own) mean model;
  terms the model does not carry are reported as 0
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

from aipw.dropout_weights import HazardModelSet, WeightTable, compute_weights, fit_hazards
from aipw.estimators import (
    GeeFit,
    MmrmFit,
    contrast_vector,
    fit_gee,
    fit_mmrm,
    fit_wgee,
    lsmean_diff,
    mean_at_visit,
)
from aipw.imputers import (
    CompletedDataset,
    SequentialModelArray,
    aipw_i_impute,
    aipw_s_impute,
    br_star_complete,
    fit_baseline_time_model,
    paik_impute,
)
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile, validate_monotone
from aipw.models import (
    DesignSpec,
    EmptyHazardPolicy,
    GeeSpec,
    HistoryDesign,
    PiCovariate,
    PositivityMode,
    RunConfig,
    SelectionMode,
    term_parts,
)
from aipw.shared.constants import (
    ESTIMAND_LAST_MEAN,
    IMPUTATION_METHODS,
    LSMEAN_PREFIX,
    METHOD_AIPW_I,
    METHOD_AIPW_S,
    METHOD_MMRM,
    METHOD_PAIK,
    METHOD_WGEE,
    SUPPORTED_METHODS,
)
from aipw.shared.errors import AipwError, DesignError, ModelSpecificationError

logger = logging.getLogger(__name__)


def lsmean_estimand(time: float) -> str:
    """Estimand name of the arm difference at ``time``."""
    return f"{LSMEAN_PREFIX}{time:g}"


@dataclass(frozen=True, slots=True)
class MethodPlan:
    """Working models and switches shared by every method pipeline.

    Attributes:
        hazard: Dropout hazard design family.
        outcome: Sequential outcome-regression family (Paik, AIPW-I, BR*).
        mean: Baseline-and-time mean design for AIPW-S.
        mmrm: MMRM mean design.
        analysis: Model solved on completed data.
        gee: Available-case GEE model.
        wgee: Weighted GEE model.
        estimands: Names reported by every pipeline.
        arm: Baseline arm indicator for ``lsmean@`` estimands.
    """

    hazard: HistoryDesign
    outcome: HistoryDesign
    mean: DesignSpec
    mmrm: DesignSpec
    analysis: GeeSpec
    gee: GeeSpec
    wgee: GeeSpec
    estimands: tuple[str, ...]
    arm: str | None = None
    positivity: PositivityMode = PositivityMode.ERROR
    positivity_floor: float | None = None
    empty_hazards: EmptyHazardPolicy = EmptyHazardPolicy.PIN_ZERO
    hazard_selection: SelectionMode = SelectionMode.NONE
    br_selection: SelectionMode = SelectionMode.FORWARD
    pi_covariate: PiCovariate = PiCovariate.INVERSE

    @classmethod
    def from_run_config(cls, cfg: RunConfig, estimands: Sequence[str]) -> MethodPlan:
        """Plan for a CLI run: one analysis model serves GEE, WGEE and MMRM."""
        analysis = cfg.analysis_spec()
        return cls(
            hazard=cfg.history_design(),
            outcome=cfg.sequential_design(),
            mean=cfg.baseline_time_design(),
            mmrm=analysis.design,
            analysis=analysis,
            gee=analysis,
            wgee=analysis,
            estimands=tuple(estimands),
            arm=cfg.arm,
            positivity=cfg.positivity,
            positivity_floor=cfg.positivity_floor,
            empty_hazards=cfg.empty_hazards,
            hazard_selection=cfg.hazard_selection,
            br_selection=cfg.br_selection,
            pi_covariate=cfg.pi_covariate,
        )

    def switches(self) -> dict[str, object]:
        """Design-decision switches recorded in artifact metadata."""
        return {
            "positivity": str(self.positivity),
            "positivity_floor": self.positivity_floor,
            "empty_hazards": str(self.empty_hazards),
            "hazard_selection": str(self.hazard_selection),
            "br_selection": str(self.br_selection),
            "selection_criterion": "aic",
            "pi_covariate": str(self.pi_covariate),
            "wgee_weighting": "occasion",
            "gee_moment_denominator": str(self.gee.denominator),
            "wgee_moment_denominator": str(self.wgee.denominator),
        }


@dataclass(frozen=True, slots=True)
class MethodResult:
    """Everything one method produced on one dataset."""

    method: str
    estimates: dict[str, float]
    profile: MissingnessProfile
    completed: CompletedDataset | None = None
    fit: GeeFit | MmrmFit | None = None
    hazards: HazardModelSet | None = None
    weights: WeightTable | None = None
    sequential: SequentialModelArray | None = None
    fingerprints: Mapping[str, str] = field(default_factory=dict)


def _estimate(
    name: str,
    ds: LongitudinalDataset,
    fit: GeeFit | MmrmFit,
    completed: CompletedDataset | None,
    arm: str | None,
) -> float:
    if name == ESTIMAND_LAST_MEAN:
        return mean_at_visit(completed if completed is not None else fit, ds.n_visits)
    if name.startswith(LSMEAN_PREFIX):
        if arm is None or arm not in fit.design.references():
            return 0.0
        return lsmean_diff(fit, ds, float(name.removeprefix(LSMEAN_PREFIX)), arm=arm)
    if name in fit.design.terms:
        return fit.coefficient(name)
    return 0.0


def _weights(
    ds: LongitudinalDataset, profile: MissingnessProfile, plan: MethodPlan
) -> tuple[HazardModelSet, WeightTable]:
    hms = fit_hazards(
        ds,
        profile,
        plan.hazard,
        empty_hazards=plan.empty_hazards,
        selection=plan.hazard_selection,
    )
    wt = compute_weights(
        hms, ds, profile, floor=plan.positivity_floor, positivity=plan.positivity
    )
    return hms, wt


def _by_design(ds: LongitudinalDataset, design: DesignSpec) -> tuple[str, ...]:
    """Subject-level terms of the analysis design."""
    baseline = set(ds.baseline_names)
    return tuple(t for t in design.terms if term_parts(t) and set(term_parts(t)) <= baseline)


def _check_method(method: str, allowed: Sequence[str]) -> None:
    if method not in allowed:
        msg = f"unknown method '{method}' (expected one of {list(allowed)})"
        raise ModelSpecificationError(msg, {"method": method})


def _complete(
    method: str, ds: LongitudinalDataset, profile: MissingnessProfile, plan: MethodPlan
) -> MethodResult:
    hms: HazardModelSet | None = None
    wt: WeightTable | None = None
    sma: SequentialModelArray | None = None
    if method == METHOD_PAIK:
        sma, completed = paik_impute(ds, profile, plan.outcome)
    elif method == METHOD_AIPW_I:
        hms, wt = _weights(ds, profile, plan)
        sma, _ = paik_impute(ds, profile, plan.outcome)
        completed = aipw_i_impute(ds, profile, wt, sma)
    elif method == METHOD_AIPW_S:
        hms, wt = _weights(ds, profile, plan)
        btm = fit_baseline_time_model(ds, profile, plan.mean)
        completed = aipw_s_impute(ds, profile, wt, btm)
    else:
        hms, wt = _weights(ds, profile, plan)
        completed = br_star_complete(
            ds,
            profile,
            wt,
            plan.outcome,
            pi_covariate=plan.pi_covariate,
            selection=plan.br_selection,
            by_design=_by_design(ds, plan.analysis.design),
        )
    logger.info("%s imputation complete", method)
    return MethodResult(
        method=method,
        estimates={},
        profile=profile,
        completed=completed,
        hazards=hms,
        weights=wt,
        sequential=sma,
        fingerprints=completed.fingerprints,
    )


def impute(method: str, ds: LongitudinalDataset, plan: MethodPlan) -> MethodResult:
    """Complete a raw panel with one imputation method, without fitting.

    Raises:
        ModelSpecificationError: ``method`` is not an imputation method.
        NonMonotoneError: The panel has intermittent gaps.
        EstimationError: A working model failed.
    """
    _check_method(method, IMPUTATION_METHODS)
    return _complete(method, ds, validate_monotone(ds), plan)


def run_method(method: str, ds: LongitudinalDataset, plan: MethodPlan) -> MethodResult:
    """Run one method end to end on a raw panel.

    Raises:
        ModelSpecificationError: Unknown method or unusable estimand.
        NonMonotoneError: The panel has intermittent gaps.
        EstimationError: Any fit failed.
    """
    _check_method(method, SUPPORTED_METHODS)
    check_estimands(plan)
    profile = validate_monotone(ds)
    if method in IMPUTATION_METHODS:
        return estimate_completed(_complete(method, ds, profile, plan), plan)

    hms: HazardModelSet | None = None
    wt: WeightTable | None = None
    fit: GeeFit | MmrmFit
    if method == METHOD_MMRM:
        fit = fit_mmrm(ds, profile, plan.mmrm)
    elif method == METHOD_WGEE:
        hms, wt = _weights(ds, profile, plan)
        fit = fit_wgee(ds, profile, wt, plan.wgee)
    else:
        fit = fit_gee(ds, plan.gee)
    estimates = {name: _estimate(name, ds, fit, None, plan.arm) for name in plan.estimands}
    logger.debug("%s estimates: %s", method, estimates)
    return MethodResult(
        method=method,
        estimates=estimates,
        profile=profile,
        fit=fit,
        hazards=hms,
        weights=wt,
    )


def estimate_completed(
    source: MethodResult | CompletedDataset, plan: MethodPlan
) -> MethodResult:
    """Solve the analysis GEE on completed data and evaluate every estimand.

    Accepts either a fresh imputation result or a completed dataset read
    back from disk; the same completed data serve any number of estimands.

    Raises:
        ModelSpecificationError: The result carries no completed data.
    """
    check_estimands(plan)
    if isinstance(source, CompletedDataset):
        base = MethodResult(
            method=source.method,
            estimates={},
            profile=validate_monotone(source.source),
            completed=source,
            fingerprints=source.fingerprints,
        )
    else:
        base = source
    completed = base.completed
    if completed is None:
        msg = f"{base.method} produced no completed data"
        raise ModelSpecificationError(msg, {"method": base.method})
    ds = completed.source
    fit = fit_gee(completed, plan.analysis)
    estimates = {name: _estimate(name, ds, fit, completed, plan.arm) for name in plan.estimands}
    logger.debug("%s estimates: %s", base.method, estimates)
    return replace(base, estimates=estimates, fit=fit)


def model_standard_errors(
    result: MethodResult, ds: LongitudinalDataset, plan: MethodPlan
) -> dict[str, float]:
    """Standard errors from the fit itself (sandwich for GEE, model-based for MMRM).

    Absent terms get 0 and ``mean_last`` has none (NaN). They ignore the
    uncertainty of imputation and of π̂; bootstrap for inference on
    imputation methods.
    """
    fit = result.fit
    if fit is None:
        return dict.fromkeys(plan.estimands, math.nan)
    cov = fit.robust_cov if isinstance(fit, GeeFit) else fit.beta_cov
    ses: dict[str, float] = {}
    for name in plan.estimands:
        if name == ESTIMAND_LAST_MEAN:
            ses[name] = math.nan
        elif name.startswith(LSMEAN_PREFIX):
            if plan.arm is None or plan.arm not in fit.design.references():
                ses[name] = 0.0
                continue
            c = contrast_vector(fit, ds, float(name.removeprefix(LSMEAN_PREFIX)), arm=plan.arm)
            ses[name] = math.sqrt(max(float(c @ cov @ c), 0.0))
        elif name in fit.design.terms:
            index = fit.design.terms.index(name)
            ses[name] = math.sqrt(max(float(cov[index, index]), 0.0))
        else:
            ses[name] = 0.0
    return ses


@dataclass(frozen=True, slots=True)
class MethodPipeline:
    """Picklable ``dataset -> estimates`` callable for one method."""

    method: str
    plan: MethodPlan

    def __call__(self, ds: LongitudinalDataset) -> dict[str, float]:
        return run_method(self.method, ds, self.plan).estimates


def evaluate_methods(
    ds: LongitudinalDataset, methods: Sequence[str], plan: MethodPlan
) -> dict[str, dict[str, float]]:
    """Every method on one dataset; a failing method yields NaN estimates."""
    results: dict[str, dict[str, float]] = {}
    for method in methods:
        try:
            results[method] = MethodPipeline(method, plan)(ds)
        except AipwError as exc:
            logger.info("%s failed: [%s] %s", method, exc.code, exc.message)
            results[method] = dict.fromkeys(plan.estimands, math.nan)
    return results


def check_estimands(plan: MethodPlan) -> None:
    """Reject ``lsmean@`` estimands without an arm or with an unparsable time.

    Raises:
        DesignError: An estimand cannot be evaluated.
    """
    for name in plan.estimands:
        if not name.startswith(LSMEAN_PREFIX):
            continue
        if plan.arm is None:
            msg = f"estimand '{name}' needs an arm covariate"
            raise DesignError(msg)
        try:
            float(name.removeprefix(LSMEAN_PREFIX))
        except ValueError as exc:
            msg = f"estimand '{name}' has no numeric time"
            raise DesignError(msg) from exc
