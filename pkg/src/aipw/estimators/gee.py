"""Identity-link generalized estimating equations.

One solver serves three callers: available-case GEE (weights ``R``),
inverse-probability weighted GEE (weights ``R/π̂``) and completed-data GEE
(unit weights). For a working covariance ``V = φ R(α)`` the estimating
equation is

    Σᵢ Dᵢᵀ V⁻¹ Wᵢ (Yᵢ - Xᵢ β) = 0,

solved in closed form for β given α, alternating with moment updates of
α until β stabilizes. ``Xᵢ`` has unweighted cells zeroed. Available-case
and completed-data fits use ``Dᵢ = Xᵢ``; the IPW fit keeps every row of
the design in ``Dᵢ``, since with a non-diagonal ``V⁻¹`` the missing rows
still pair with observed residuals. Covariances are the model-based
``A⁻¹`` and the sandwich ``A⁻¹ B A⁻ᵀ`` with ``A = Σ Dᵢᵀ V⁻¹ Wᵢ Xᵢ`` and
``B = Σ UᵢUᵢᵀ``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.config.settings import get_settings
from aipw.dropout_weights import WeightTable
from aipw.glm_core import build_design, independent_columns
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.models import DesignSpec, GeeSpec, MomentDenominator, WorkingCorrelation
from aipw.shared.errors import (
    ConvergenceError,
    DesignError,
    InsufficientDataError,
    SingularCovarianceError,
)

if TYPE_CHECKING:
    from aipw.imputers import CompletedDataset

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class GeeFit:
    """Solution of the GEE and its covariance estimates.

    Attributes:
        coefficients: β̂ (0 for aliased columns).
        model_cov: Model-based covariance ``A⁻¹``.
        robust_cov: Sandwich covariance.
        correlation: Working correlation ``R(α̂)``.
        scale: Moment estimate of φ.
        iterations: β/α alternations performed.
        score_norm: Max-norm of the summed estimating function at β̂.
        fitted_means: ``N × M`` means ``Xβ̂``.
        n_used: Subjects with at least one weighted cell.
        design: Mean design.
        weighting: ``available``, ``ipw`` or ``completed``.
        dropped: Aliased design columns.
    """

    coefficients: FloatArray
    model_cov: FloatArray
    robust_cov: FloatArray
    correlation: FloatArray
    scale: float
    iterations: int
    score_norm: float
    fitted_means: FloatArray
    n_used: int
    design: DesignSpec
    weighting: str
    dropped: tuple[int, ...]

    @property
    def converged(self) -> bool:
        """Fits are only returned on convergence."""
        return True

    def coefficient(self, term: str) -> float:
        """Estimate of one design term."""
        return float(self.coefficients[self.design.terms.index(term)])

    def robust_se(self) -> FloatArray:
        """Sandwich standard errors."""
        return np.sqrt(np.clip(np.diag(self.robust_cov), 0.0, None))

    def model_se(self) -> FloatArray:
        """Model-based standard errors."""
        return np.sqrt(np.clip(np.diag(self.model_cov), 0.0, None))

    def summary_frame(self) -> pd.DataFrame:
        """``term, estimate, model_se, robust_se``."""
        return pd.DataFrame(
            {
                "term": list(self.design.terms),
                "estimate": self.coefficients,
                "model_se": self.model_se(),
                "robust_se": self.robust_se(),
            }
        )


# ── Working correlation ──────────────────────────────────────────────────


def _working_correlation(
    residuals: FloatArray,
    mask: npt.NDArray[np.bool_],
    structure: WorkingCorrelation,
    denominator: MomentDenominator,
) -> tuple[FloatArray, float]:
    """Moment estimates of ``R(α)`` and φ over observed cells and pairs.

    ``SUBJECTS`` divides every visit (pair) sum by N; ``CONTRIBUTING``
    divides by the cells (pairs) that enter it. With complete data the two
    agree.
    """
    n, m = residuals.shape
    e = np.where(mask, residuals, 0.0)
    observed = mask.astype(float)
    by_subjects = denominator is MomentDenominator.SUBJECTS
    n_cells = float(n * m) if by_subjects else observed.sum()
    scale = float(np.sum(e**2) / n_cells)
    if structure is WorkingCorrelation.INDEPENDENCE or scale <= 0.0:
        return np.eye(m), scale

    cross = e.T @ e
    pairs = np.full((m, m), float(n)) if by_subjects else observed.T @ observed
    if structure is WorkingCorrelation.EXCHANGEABLE:
        upper = np.triu_indices(m, k=1)
        n_pairs = pairs[upper].sum()
        alpha = float(cross[upper].sum() / (n_pairs * scale)) if n_pairs > 0 else 0.0
        correlation = np.full((m, m), alpha)
        np.fill_diagonal(correlation, 1.0)
        return correlation, scale

    covariance = np.divide(cross, pairs, out=np.zeros_like(cross), where=pairs > 0)
    sd = np.sqrt(np.diag(covariance))
    if np.any(sd <= 0.0):
        msg = "unstructured working correlation undefined: a visit has zero residual variance"
        raise SingularCovarianceError(msg)
    correlation = covariance / np.outer(sd, sd)
    np.fill_diagonal(correlation, 1.0)
    return correlation, scale


def _inverse(covariance: FloatArray) -> FloatArray:
    try:
        np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError as exc:
        msg = "working covariance is not positive definite"
        raise SingularCovarianceError(msg) from exc
    return np.linalg.inv(covariance)


# ── Core solver ──────────────────────────────────────────────────────────


def _solve_gee(
    x: FloatArray,
    derivative: FloatArray,
    y: FloatArray,
    weights: FloatArray,
    spec: GeeSpec,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray, float, int, float]:
    """Alternate closed-form β and moment α updates.

    Args:
        x: ``N × M × p`` design, zero on unweighted cells.
        derivative: ``N × M × p`` left factor ``Dᵢ`` of the estimating
            equation; equal to ``x`` unless unweighted cells keep their rows.
        y: ``N × M`` response, zero on unweighted cells.
        weights: ``N × M`` occasion weights.
        spec: Working structure and moment denominator.

    Returns:
        β, model covariance, robust covariance, working correlation, scale,
        iterations and score norm.
    """
    settings = get_settings()
    mask = weights > 0.0
    m = y.shape[1]
    inverse = np.eye(m)
    beta = np.zeros(x.shape[2])
    working = np.eye(m)
    scale = 1.0
    information = np.eye(x.shape[2])
    iterations = 0
    for iterations in range(1, settings.gee_max_iterations + 1):
        information = np.einsum("ijp,jk,ik,ikq->pq", derivative, inverse, weights, x)
        target = np.einsum("ijp,jk,ik,ik->p", derivative, inverse, weights, y)
        try:
            updated = np.linalg.solve(information, target)
        except np.linalg.LinAlgError as exc:
            msg = "singular GEE information matrix"
            raise SingularCovarianceError(msg) from exc
        change = float(np.max(np.abs(updated - beta))) if iterations > 1 else np.inf
        beta = updated
        working, scale = _working_correlation(
            y - x @ beta, mask, spec.correlation, spec.denominator
        )
        independent = spec.correlation is WorkingCorrelation.INDEPENDENCE or scale <= 0.0
        if independent or change < settings.gee_tolerance:
            break
        inverse = _inverse(scale * working)
        logger.debug("GEE iteration %d: max |Δβ| = %.3g", iterations, change)
    else:
        msg = f"GEE did not converge in {settings.gee_max_iterations} iterations"
        raise ConvergenceError(msg, {"iterations": settings.gee_max_iterations})

    if scale > 0.0:
        # Final solve with the converged working covariance.
        inverse = _inverse(scale * working)
        information = np.einsum("ijp,jk,ik,ikq->pq", derivative, inverse, weights, x)
        beta = np.linalg.solve(
            information, np.einsum("ijp,jk,ik,ik->p", derivative, inverse, weights, y)
        )

    residuals = np.where(mask, y - x @ beta, 0.0)
    scores = np.einsum("ijp,jk,ik->ip", derivative, inverse, weights * residuals)
    bread = np.linalg.inv(information) if scale > 0.0 else np.zeros_like(information)
    meat = scores.T @ scores
    robust = bread @ meat @ bread.T
    score_norm = float(np.max(np.abs(scores.sum(axis=0)))) if scores.size else 0.0
    return beta, bread, robust, working, scale, iterations, score_norm


def _fit(
    ds: LongitudinalDataset,
    y: FloatArray,
    weights: FloatArray,
    spec: GeeSpec,
    weighting: str,
    *,
    keep_unweighted_rows: bool = False,
) -> GeeFit:
    design = spec.design
    x_full = build_design(design, ds.long_namespace())
    mask = weights > 0.0
    if not np.all(np.isfinite(x_full[mask])):
        msg = "analysis design has missing covariate values on weighted cells"
        raise DesignError(msg)
    n_cells = int(mask.sum())
    if n_cells < design.width:
        msg = f"{n_cells} weighted cell(s) for a design of width {design.width}"
        raise InsufficientDataError(msg)
    keep = independent_columns(x_full[mask] * np.sqrt(weights[mask])[:, None])
    dropped = tuple(j for j in range(design.width) if j not in keep)
    if dropped:
        logger.warning("Dropped aliased design column(s) %s", [design.terms[j] for j in dropped])

    x = np.where(mask[:, :, None], x_full[:, :, keep], 0.0)
    derivative = x
    if keep_unweighted_rows:
        derivative = np.nan_to_num(x_full[:, :, keep], nan=0.0, posinf=0.0, neginf=0.0)
    y_safe = np.where(mask, y, 0.0)
    beta, model_cov, robust_cov, working, scale, iterations, score_norm = _solve_gee(
        x, derivative, y_safe, weights, spec
    )

    p = design.width
    coefficients = np.zeros(p)
    coefficients[keep] = beta
    model_full = np.zeros((p, p))
    robust_full = np.zeros((p, p))
    model_full[np.ix_(keep, keep)] = model_cov
    robust_full[np.ix_(keep, keep)] = robust_cov
    logger.info(
        "GEE (%s, %s) converged in %d iteration(s)", weighting, spec.correlation, iterations
    )
    return GeeFit(
        coefficients=coefficients,
        model_cov=model_full,
        robust_cov=robust_full,
        correlation=working,
        scale=scale,
        iterations=iterations,
        score_norm=score_norm,
        fitted_means=x_full @ coefficients,
        n_used=int(mask.any(axis=1).sum()),
        design=design,
        weighting=weighting,
        dropped=dropped,
    )


# ── Public entry points ──────────────────────────────────────────────────


def fit_gee(data: LongitudinalDataset | CompletedDataset, spec: GeeSpec) -> GeeFit:
    """Unweighted GEE on raw (available-case) or completed data.

    Raw data contribute their observed cells only; completed data
    contribute every cell.

    Raises:
        ConvergenceError: No convergence within the iteration cap.
        SingularCovarianceError: Singular working covariance.
        DesignError: Design values missing on used cells.
    """
    if isinstance(data, LongitudinalDataset):
        observed = data.observed.astype(float)
        return _fit(data, data.outcomes, observed, spec, "available")
    return _fit(data.source, data.values, np.ones(data.values.shape), spec, "completed")


def fit_wgee(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    wt: WeightTable,
    spec: GeeSpec,
) -> GeeFit:
    """Inverse-probability weighted GEE with occasion weights ``R/π̂``.

    π̂ is treated as fixed in the sandwich; bootstrap the whole pipeline to
    account for its estimation.
    """
    wt.check_dataset(ds)
    observed = profile.observed == 1
    weights = np.divide(1.0, wt.visit_pi, out=np.zeros(observed.shape), where=observed)
    return _fit(ds, ds.outcomes, weights, spec, "ipw", keep_unweighted_rows=True)
