"""Multivariate-normal repeated-measures model with unstructured covariance.

Maximum likelihood over each subject's observed prefix (valid under
monotone MAR dropout). β is profiled out by generalized least squares for
a given Σ, and Σ = LLᵀ is optimized by BFGS over the lower triangle of L
with log-scaled diagonal, so every proposal is positive definite.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd
from scipy import optimize

from aipw.config.settings import get_settings
from aipw.glm_core import build_design, independent_columns
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.models import DesignSpec
from aipw.shared.errors import ConvergenceError, DesignError, SingularCovarianceError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

_LOG_2PI = math.log(2.0 * math.pi)
_VARIANCE_FLOOR = 1e-8


@dataclass(frozen=True, slots=True)
class MmrmFit:
    """Fitted repeated-measures model.

    Attributes:
        coefficients: Mean-model coefficients β̂ (0 for aliased columns).
        beta_cov: Model-based covariance of β̂.
        cov: Unstructured ``M × M`` residual covariance Σ̂.
        log_likelihood: Maximized log-likelihood.
        loglik_trace: Log-likelihood after each optimizer iteration.
        converged: Optimizer reported success or a negligible gradient.
        iterations: Optimizer iterations.
        gradient_norm: Max-norm of the final gradient.
        fitted_means: ``N × M`` model means ``Xβ̂`` for every cell.
        n_used: Subjects contributing to the likelihood.
        design: Mean design.
        dropped: Aliased design columns.
    """

    coefficients: FloatArray
    beta_cov: FloatArray
    cov: FloatArray
    log_likelihood: float
    loglik_trace: tuple[float, ...]
    converged: bool
    iterations: int
    gradient_norm: float
    fitted_means: FloatArray
    n_used: int
    design: DesignSpec
    dropped: tuple[int, ...]

    def coefficient(self, term: str) -> float:
        """Estimate of one design term."""
        return float(self.coefficients[self.design.terms.index(term)])

    def standard_errors(self) -> FloatArray:
        """Model-based standard errors."""
        return np.sqrt(np.clip(np.diag(self.beta_cov), 0.0, None))

    def summary_frame(self) -> pd.DataFrame:
        """``term, estimate, model_se, robust_se`` (no sandwich for likelihood fits)."""
        return pd.DataFrame(
            {
                "term": list(self.design.terms),
                "estimate": self.coefficients,
                "model_se": self.standard_errors(),
                "robust_se": np.full(self.design.width, np.nan),
            }
        )


@dataclass(frozen=True, slots=True)
class _PatternBlock:
    """Subjects sharing the same observed prefix length."""

    length: int
    x: FloatArray
    y: FloatArray


class _ProfileLikelihood:
    """Profile log-likelihood of θ = vech(L) and its gradient."""

    def __init__(self, blocks: list[_PatternBlock], n_visits: int, width: int) -> None:
        self.blocks = blocks
        self.n_visits = n_visits
        self.width = width
        self.rows, self.cols = np.tril_indices(n_visits)
        self.diagonal = self.rows == self.cols

    def unpack(self, theta: FloatArray) -> FloatArray:
        lower = np.zeros((self.n_visits, self.n_visits))
        values = np.where(self.diagonal, np.exp(theta), theta)
        lower[self.rows, self.cols] = values
        return lower

    def pack(self, cov: FloatArray) -> FloatArray:
        lower = np.linalg.cholesky(cov)
        theta = lower[self.rows, self.cols]
        return np.where(self.diagonal, np.log(lower[self.rows, self.cols]), theta)

    def gls(self, cov: FloatArray) -> tuple[FloatArray, FloatArray, list[FloatArray]]:
        """GLS coefficients, their information matrix and the per-block inverses."""
        information = np.zeros((self.width, self.width))
        score = np.zeros(self.width)
        inverses: list[FloatArray] = []
        for block in self.blocks:
            m = block.length
            inverse = np.linalg.inv(cov[:m, :m])
            inverses.append(inverse)
            information += np.einsum("ijp,jk,ikq->pq", block.x, inverse, block.x)
            score += np.einsum("ijp,jk,ik->p", block.x, inverse, block.y)
        return np.linalg.solve(information, score), information, inverses

    def evaluate(self, theta: FloatArray) -> tuple[float, FloatArray, FloatArray]:
        """Log-likelihood, gradient with respect to θ, and profiled β."""
        lower = self.unpack(theta)
        cov = lower @ lower.T
        beta, _, inverses = self.gls(cov)
        loglik = 0.0
        g = np.zeros((self.n_visits, self.n_visits))
        for block, inverse in zip(self.blocks, inverses, strict=True):
            m = block.length
            n_block = block.y.shape[0]
            residual = block.y - block.x @ beta
            cross = residual.T @ residual
            _, logdet = np.linalg.slogdet(cov[:m, :m])
            loglik -= 0.5 * (
                n_block * m * _LOG_2PI + n_block * logdet + float(np.sum(inverse * cross))
            )
            g[:m, :m] += 0.5 * (inverse @ cross @ inverse - n_block * inverse)
        grad_lower = 2.0 * g @ lower
        gradient = grad_lower[self.rows, self.cols]
        gradient = np.where(self.diagonal, gradient * lower[self.rows, self.cols], gradient)
        return loglik, gradient, beta


def _blocks(
    x: FloatArray, y: FloatArray, profile: MissingnessProfile
) -> list[_PatternBlock]:
    blocks: list[_PatternBlock] = []
    for length in sorted(set(profile.last_visit.tolist())):
        members = profile.last_visit == length
        blocks.append(
            _PatternBlock(length=length, x=x[members, :length], y=y[members, :length])
        )
    return blocks


def _starting_covariance(
    x: FloatArray, y: FloatArray, observed: npt.NDArray[np.bool_]
) -> FloatArray:
    """Pairwise moment covariance of OLS residuals (divisor: pairs observed)."""
    beta, *_ = np.linalg.lstsq(x[observed], y[observed], rcond=None)
    residual = np.where(observed, y - x @ beta, 0.0)
    counts = observed.astype(float).T @ observed.astype(float)
    cov = np.divide(
        residual.T @ residual, counts, out=np.zeros_like(counts), where=counts > 0
    )
    variances = np.maximum(np.diag(cov), _VARIANCE_FLOOR)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        logger.debug("Pairwise starting covariance not PD; starting from its diagonal")
        return np.diag(variances)
    if np.any(np.diag(cov) < _VARIANCE_FLOOR):
        return np.diag(variances)
    return cov


def fit_mmrm(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    design: DesignSpec,
) -> MmrmFit:
    """Maximum-likelihood fit of the unstructured repeated-measures model.

    Args:
        ds: Monotone (or complete) dataset.
        profile: Its missingness profile.
        design: Long-format mean design.

    Returns:
        The fitted model.

    Raises:
        DesignError: The design is not finite on observed cells.
        ConvergenceError: The optimizer neither succeeded nor reached a small gradient.
        SingularCovarianceError: The covariance collapses to singularity.
    """
    settings = get_settings()
    x_full = build_design(design, ds.long_namespace())
    observed = profile.observed == 1
    y = np.where(observed, ds.outcomes, 0.0)
    if not np.all(np.isfinite(x_full[observed])):
        msg = "mean design has missing values on observed cells"
        raise DesignError(msg)

    keep = independent_columns(x_full[observed])
    dropped = tuple(j for j in range(design.width) if j not in keep)
    if dropped:
        logger.warning("Dropped aliased design column(s) %s", [design.terms[j] for j in dropped])
    x = x_full[:, :, keep]

    likelihood = _ProfileLikelihood(_blocks(x, y, profile), ds.n_visits, len(keep))
    theta0 = likelihood.pack(_starting_covariance(x, y, observed))
    trace: list[float] = []

    def objective(theta: FloatArray) -> tuple[float, FloatArray]:
        loglik, gradient, _ = likelihood.evaluate(theta)
        return -loglik, -gradient

    def record(intermediate_result: optimize.OptimizeResult) -> None:
        trace.append(-float(intermediate_result.fun))

    try:
        result = optimize.minimize(
            objective,
            theta0,
            jac=True,
            method="BFGS",
            callback=record,
            options={
                "maxiter": settings.mmrm_max_iterations,
                "gtol": settings.mmrm_gradient_tolerance,
            },
        )
        loglik, gradient, beta = likelihood.evaluate(result.x)
        lower = likelihood.unpack(result.x)
        cov = lower @ lower.T
        _, information, _ = likelihood.gls(cov)
        beta_cov_kept = np.linalg.inv(information)
    except np.linalg.LinAlgError as exc:
        msg = "residual covariance became singular during optimization"
        raise SingularCovarianceError(msg) from exc

    gradient_norm = float(np.max(np.abs(gradient)))
    converged = bool(result.success) or gradient_norm < math.sqrt(
        settings.mmrm_gradient_tolerance
    )
    if not converged:
        msg = f"MMRM did not converge in {result.nit} iterations: {result.message}"
        raise ConvergenceError(msg, {"iterations": int(result.nit), "gradient": gradient_norm})

    p = design.width
    coefficients = np.zeros(p)
    coefficients[keep] = beta
    beta_cov = np.zeros((p, p))
    beta_cov[np.ix_(keep, keep)] = beta_cov_kept
    logger.info("MMRM converged in %d iterations (loglik %.6f)", int(result.nit), loglik)
    return MmrmFit(
        coefficients=coefficients,
        beta_cov=beta_cov,
        cov=cov,
        log_likelihood=loglik,
        loglik_trace=(*trace,) if trace else (loglik,),
        converged=True,
        iterations=int(result.nit),
        gradient_norm=gradient_norm,
        fitted_means=x_full @ coefficients,
        n_used=ds.n_subjects,
        design=design,
        dropped=dropped,
    )
