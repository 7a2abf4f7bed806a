"""Unit tests for the method pipelines: agreement on complete data, the
impute / estimate split, model-based standard errors and estimand checks.
"""

from __future__ import annotations

import dataclasses
import math
import pickle

import numpy as np
import pytest
from aipw.estimators import contrast_vector, fit_gee
from aipw.longitudinal_data import LongitudinalDataset
from aipw.models import (
    BootstrapPlan,
    DatasetSchema,
    DesignSpec,
    GeeSpec,
    RunConfig,
    TrialConfig,
    WorkingCorrelation,
)
from aipw.pipeline import (
    AVAILABLE_CASE,
    REPORT_COLUMNS,
    MethodPipeline,
    MethodPlan,
    analyze_trial,
    check_estimands,
    estimate_completed,
    evaluate_methods,
    impute,
    lsmean_estimand,
    model_standard_errors,
    run_method,
)
from aipw.shared.constants import SUPPORTED_METHODS
from aipw.shared.errors import DesignError, ModelSpecificationError
from aipw.shared.seeding import child_rng
from aipw.simulation import ANALYSIS_DESIGN, generate_trial, trial_plan

from tests.conftest import make_complete_panel, make_plan

COEFFICIENTS = ("x1", "x2", "t", "x2:t")

# Every visit gets its own intercept and covariate effects, so GLS equals OLS
# for any working covariance.
SATURATED_DESIGN = DesignSpec.parse(
    "visit1 + visit2 + visit3 + x1:visit1 + x1:visit2 + x1:visit3"
    " + x2:visit1 + x2:visit2 + x2:visit3"
)
SATURATED_ESTIMANDS = ("visit3", "x1:visit3", "x2:visit3", "mean_last")


def _independence_plan(plan: MethodPlan) -> MethodPlan:
    """Same plan with an independence working correlation for WGEE."""
    return dataclasses.replace(plan, wgee=GeeSpec(design=ANALYSIS_DESIGN))


# ── Complete data ─────────────────────────────────────────────────────


class TestCompleteDataAgreement:
    """Without dropout every method reduces to the full-data analysis."""

    @pytest.mark.parametrize("method", ["paik", "aipw-i", "aipw-s"])
    def test_imputers_keep_observed_values(
        self, complete_panel: LongitudinalDataset, correct_plan: MethodPlan, method: str
    ) -> None:
        """Nothing is missing, so the completed data are the observed data."""
        result = run_method(method, complete_panel, correct_plan)

        assert result.completed is not None
        np.testing.assert_allclose(result.completed.values, complete_panel.outcomes, atol=1e-6)

    @pytest.mark.parametrize("method", ["paik", "aipw-i", "aipw-s", "br-star"])
    def test_imputers_give_full_data_analysis(
        self, complete_panel: LongitudinalDataset, correct_plan: MethodPlan, method: str
    ) -> None:
        """The analysis GEE on completed data is the full-data GEE."""
        result = run_method(method, complete_panel, correct_plan)
        reference = fit_gee(complete_panel, GeeSpec(design=ANALYSIS_DESIGN))

        for name in COEFFICIENTS:
            assert result.estimates[name] == pytest.approx(
                reference.coefficient(name), abs=1e-6
            )
        assert result.estimates["mean_last"] == pytest.approx(
            complete_panel.outcomes[:, -1].mean(), abs=1e-6
        )

    @pytest.mark.parametrize("method", ["gee", "wgee"])
    def test_estimating_equations(
        self, complete_panel: LongitudinalDataset, correct_plan: MethodPlan, method: str
    ) -> None:
        """GEE and unit-weight WGEE give the full-data coefficients."""
        result = run_method(method, complete_panel, _independence_plan(correct_plan))
        reference = fit_gee(complete_panel, GeeSpec(design=ANALYSIS_DESIGN))

        assert result.completed is None
        for name in COEFFICIENTS:
            assert result.estimates[name] == pytest.approx(
                reference.coefficient(name), abs=1e-6
            )

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(100))
    def test_all_methods_agree_across_datasets(self, seed: int) -> None:
        """On complete data all seven methods give the full-data fit of a visit-saturated model."""
        ds = make_complete_panel(n=120, seed=seed)
        plan = dataclasses.replace(
            make_plan(SATURATED_ESTIMANDS),
            mmrm=SATURATED_DESIGN,
            analysis=GeeSpec(design=SATURATED_DESIGN),
            gee=GeeSpec(design=SATURATED_DESIGN),
            wgee=GeeSpec(design=SATURATED_DESIGN, correlation=WorkingCorrelation.UNSTRUCTURED),
        )
        reference = fit_gee(ds, GeeSpec(design=SATURATED_DESIGN))
        expected = {term: reference.coefficient(term) for term in SATURATED_ESTIMANDS[:3]}
        expected["mean_last"] = float(ds.outcomes[:, -1].mean())

        assert len(SUPPORTED_METHODS) == 7
        for method in SUPPORTED_METHODS:
            result = run_method(method, ds, plan)
            if method in {"paik", "aipw-i", "aipw-s"}:
                assert result.completed is not None
                np.testing.assert_allclose(result.completed.values, ds.outcomes, atol=1e-10)
            for name, value in expected.items():
                assert result.estimates[name] == pytest.approx(value, abs=1e-6), (method, name)


# ── Dropout ───────────────────────────────────────────────────────────


class TestRunMethod:
    """End-to-end runs on panels with dropout."""

    def test_aipw_i_artifacts(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """AIPW-I keeps its hazards, weights, sequential models and fingerprints."""
        result = run_method("aipw-i", dropout_panel, correct_plan)

        assert result.method == "aipw-i"
        assert result.hazards is not None
        assert result.weights is not None
        assert result.sequential is not None
        assert result.completed is not None
        assert result.fit is not None
        assert result.fingerprints["dataset"] == dropout_panel.fingerprint()
        assert set(result.estimates) == set(correct_plan.estimands)

    @pytest.mark.parametrize("method", ["paik", "aipw-i"])
    def test_last_mean_near_full_data(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan, method: str
    ) -> None:
        """Under history-driven dropout the imputed mean tracks the full-data mean."""
        full = make_complete_panel(n=400, seed=11)
        result = run_method(method, dropout_panel, correct_plan)

        full_mean = full.outcomes[:, -1].mean()
        assert result.estimates["mean_last"] == pytest.approx(full_mean, abs=0.5)

    def test_unknown_method(
        self, complete_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """Unknown method names are refused."""
        with pytest.raises(ModelSpecificationError, match="unknown method") as exc_info:
            run_method("locf", complete_panel, correct_plan)

        assert exc_info.value.details == {"method": "locf"}

    def test_impute_rejects_model_methods(
        self, complete_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """Only imputation methods can write completed data."""
        with pytest.raises(ModelSpecificationError, match="unknown method"):
            impute("mmrm", complete_panel, correct_plan)


class TestImputeThenEstimate:
    """The two-step path equals the fused path."""

    def test_same_estimates(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """Estimating from a stored imputation reproduces ``run_method``."""
        fused = run_method("aipw-i", dropout_panel, correct_plan)
        imputed = impute("aipw-i", dropout_panel, correct_plan)

        assert imputed.estimates == {}
        assert imputed.fit is None
        two_step = estimate_completed(imputed, correct_plan)
        assert two_step.estimates == fused.estimates
        assert imputed.completed is not None
        from_data = estimate_completed(imputed.completed, correct_plan)
        assert from_data.estimates == fused.estimates

    def test_several_estimand_sets(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """One imputation serves any estimand list."""
        imputed = impute("paik", dropout_panel, correct_plan)
        narrow = dataclasses.replace(correct_plan, estimands=("x2:t",))

        full = estimate_completed(imputed, correct_plan)
        assert estimate_completed(imputed, narrow).estimates == {"x2:t": full.estimates["x2:t"]}

    def test_no_completed_data(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """Model-based methods cannot be re-estimated."""
        result = run_method("gee", dropout_panel, correct_plan)

        with pytest.raises(ModelSpecificationError, match="no completed data"):
            estimate_completed(result, correct_plan)


# ── Estimands and standard errors ─────────────────────────────────────


class TestEstimands:
    """Estimand naming and checks."""

    def test_lsmean_names(self) -> None:
        """Times are formatted compactly."""
        assert lsmean_estimand(1.0) == "lsmean@1"
        assert lsmean_estimand(2.5) == "lsmean@2.5"

    def test_lsmean_needs_arm(self) -> None:
        """An LS-mean estimand without an arm is refused."""
        plan = dataclasses.replace(make_plan(("lsmean@1",)), arm=None)

        with pytest.raises(DesignError, match="needs an arm"):
            check_estimands(plan)

    def test_lsmean_needs_time(self) -> None:
        """The suffix must be a number."""
        with pytest.raises(DesignError, match="no numeric time"):
            check_estimands(make_plan(("lsmean@end",)))

    def test_absent_terms_are_zero(self, complete_panel: LongitudinalDataset) -> None:
        """Coefficients the model does not carry are reported as 0."""
        plan = make_plan(("x2", "x3"))
        plan = dataclasses.replace(plan, gee=GeeSpec(design=ANALYSIS_DESIGN.without("x2")))

        assert run_method("gee", complete_panel, plan).estimates == {"x2": 0.0, "x3": 0.0}


class TestModelStandardErrors:
    """Standard errors from the fit alone."""

    def test_gee_sandwich(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """Coefficient SEs are the sandwich SEs; mean_last has none."""
        plan = dataclasses.replace(correct_plan, estimands=("mean_last", "x1", "x3", "lsmean@2"))
        result = run_method("gee", dropout_panel, plan)
        ses = model_standard_errors(result, dropout_panel, plan)

        assert result.fit is not None
        cov = result.fit.robust_cov
        assert math.isnan(ses["mean_last"])
        assert ses["x1"] == pytest.approx(math.sqrt(cov[1, 1]))
        assert ses["x3"] == 0.0
        c = contrast_vector(result.fit, dropout_panel, 2.0, arm="x2")
        assert ses["lsmean@2"] == pytest.approx(math.sqrt(c @ cov @ c))

    def test_without_fit(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """An imputation-only result has no model SEs."""
        imputed = impute("paik", dropout_panel, correct_plan)
        ses = model_standard_errors(imputed, dropout_panel, correct_plan)

        assert all(math.isnan(se) for se in ses.values())


# ── Plans and pipelines ───────────────────────────────────────────────


class TestMethodPlan:
    """Plans built from a run configuration."""

    def test_from_run_config(self) -> None:
        """Default designs come from the column mapping."""
        cfg = RunConfig(
            columns=DatasetSchema(baseline=("x1", "x2")), arm="x2", lsmean_times=(1.0,)
        )
        plan = MethodPlan.from_run_config(cfg, cfg.estimand_names())

        assert plan.hazard.baseline == ("x1", "x2")
        assert plan.outcome.baseline == ("x1", "x2")
        assert plan.mean.terms == ("1", "x1", "x2", "t", "x2:t")
        assert plan.mmrm == plan.analysis.design == plan.mean
        assert plan.estimands == ("1", "x1", "x2", "t", "x2:t", "mean_last", "lsmean@1")
        assert plan.arm == "x2"

    def test_switches(self, correct_plan: MethodPlan) -> None:
        """Switches are plain values for metadata."""
        switches = correct_plan.switches()

        assert switches["positivity"] == "error"
        assert switches["pi_covariate"] == "inverse"
        assert switches["wgee_weighting"] == "occasion"
        assert switches["gee_moment_denominator"] == "subjects"
        assert switches["wgee_moment_denominator"] == "subjects"


class TestMethodPipeline:
    """Picklable pipelines and batch evaluation."""

    def test_pickle_round_trip(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """A pickled pipeline gives the same estimates."""
        pipeline = MethodPipeline("aipw-s", correct_plan)
        restored = pickle.loads(pickle.dumps(pipeline))  # noqa: S301

        assert restored(dropout_panel) == pipeline(dropout_panel)

    def test_failures_become_nan(
        self, dropout_panel: LongitudinalDataset, correct_plan: MethodPlan
    ) -> None:
        """A failing method yields NaN without stopping the others."""
        plan = dataclasses.replace(correct_plan, positivity_floor=0.999)
        results = evaluate_methods(dropout_panel, ["gee", "aipw-i"], plan)

        assert all(math.isfinite(v) for v in results["gee"].values())
        assert all(math.isnan(v) for v in results["aipw-i"].values())


# ── Trial report ──────────────────────────────────────────────────────


class TestAnalyzeTrial:
    """Two-arm report with bootstrap intervals."""

    def test_needs_arm(self) -> None:
        """Plans without an arm are refused."""
        cfg = TrialConfig(n_per_arm=20)
        ds = generate_trial(cfg, child_rng(1))
        plan = dataclasses.replace(trial_plan(cfg), arm=None)

        with pytest.raises(ModelSpecificationError, match="arm covariate"):
            analyze_trial(ds, plan, BootstrapPlan(replicates=2))

    @pytest.mark.slow
    def test_report_rows(self) -> None:
        """Every method reports every estimand, plus observed-mean reference rows."""
        cfg = TrialConfig(n_per_arm=150)
        ds = generate_trial(cfg, child_rng(6))
        frame = analyze_trial(ds, trial_plan(cfg), BootstrapPlan(replicates=20, seed=1))

        assert list(frame.columns) == list(REPORT_COLUMNS)
        assert len(frame) == 3 * 5 + 3
        fitted = frame[frame["method"] != AVAILABLE_CASE]
        assert (fitted["se"] > 0.0).all()
        assert (fitted["lower"] < fitted["estimate"]).all()
        reference = frame[frame["method"] == AVAILABLE_CASE]
        assert list(reference["estimand"]) == ["lsmean@1", "lsmean@2", "lsmean@3"]
        assert reference["se"].isna().all()
