"""Weighted least squares and logistic regression on statsmodels.

Both fitters share the aliasing policy: columns whose QR diagonal is
negligible relative to their norm are dropped in column order, their
coefficients reported as 0 and their indices recorded on the fit.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import statsmodels.api as sm
from scipy import linalg, special
from statsmodels.tools.sm_exceptions import ConvergenceWarning, PerfectSeparationWarning

from aipw.config.settings import get_settings
from aipw.models import DesignSpec
from aipw.shared.errors import (
    DataValidationError,
    DesignError,
    InsufficientDataError,
    SeparationError,
    SingleClassError,
)

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class LinearModelFit:
    """Weighted least-squares fit.

    Attributes:
        coefficients: One entry per design column (0 for dropped columns).
        residual_variance: Weighted RSS over residual degrees of freedom.
        rss: Weighted residual sum of squares.
        n_used: Rows with positive weight.
        dropped: Indices of aliased columns removed before solving.
        fitted: ``X @ coefficients`` for every input row.
        design: Design the matrix was built from, when known.
    """

    coefficients: FloatArray
    residual_variance: float
    rss: float
    n_used: int
    dropped: tuple[int, ...]
    fitted: FloatArray
    design: DesignSpec | None = None

    @property
    def rank(self) -> int:
        """Number of estimated (non-aliased) coefficients."""
        return self.coefficients.shape[0] - len(self.dropped)


@dataclass(frozen=True, slots=True)
class LogisticModelFit:
    """Binomial logit fit.

    Attributes:
        coefficients: Log-odds coefficients (0 for dropped columns).
        converged: Score or coefficient change fell below tolerance.
        n_used: Rows used.
        iterations: IRLS iterations performed.
        log_likelihood: Log-likelihood at the returned coefficients.
        score_norm: Max-norm of the score at the returned coefficients.
        dropped: Indices of aliased columns.
        design: Design the matrix was built from, when known.
    """

    coefficients: FloatArray
    converged: bool
    n_used: int
    iterations: int
    log_likelihood: float
    score_norm: float
    dropped: tuple[int, ...]
    design: DesignSpec | None = None

    @property
    def rank(self) -> int:
        """Number of estimated (non-aliased) coefficients."""
        return self.coefficients.shape[0] - len(self.dropped)


# ── Shared helpers ───────────────────────────────────────────────────────


def independent_columns(x: FloatArray, tolerance: float | None = None) -> list[int]:
    """Indices of columns kept under column-order aliasing.

    Args:
        x: ``n × p`` matrix.
        tolerance: Relative QR-diagonal threshold (defaults to settings).

    Returns:
        Ascending indices of linearly independent columns.
    """
    tol = get_settings().rank_tolerance if tolerance is None else tolerance
    if x.shape[1] == 0:
        return []
    r = linalg.qr(x, mode="r")[0]
    diag = np.abs(np.diag(r))
    norms = np.linalg.norm(x, axis=0)
    keep: list[int] = []
    for j in range(x.shape[1]):
        if j < diag.shape[0] and norms[j] > 0.0 and diag[j] > tol * norms[j]:
            keep.append(j)
    return keep


def _column_label(design: DesignSpec | None, index: int) -> str:
    if design is not None and index < design.width:
        return design.terms[index]
    return f"column {index}"


def _warn_dropped(dropped: tuple[int, ...], design: DesignSpec | None) -> None:
    if dropped:
        labels = [_column_label(design, j) for j in dropped]
        logger.warning("Dropped aliased design column(s) %s", labels)


def _as_matrix(x: npt.ArrayLike, y: npt.ArrayLike) -> tuple[FloatArray, FloatArray]:
    xm = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xm.ndim != 2 or yv.ndim != 1 or xm.shape[0] != yv.shape[0]:  # noqa: PLR2004
        msg = f"design shape {xm.shape} incompatible with response shape {yv.shape}"
        raise DesignError(msg)
    return xm, yv


@contextmanager
def _captured_warnings() -> Iterator[list[warnings.WarningMessage]]:
    """Collect statsmodels and floating-point warnings raised during a fit."""
    with warnings.catch_warnings(record=True) as caught, np.errstate(all="ignore"):
        warnings.simplefilter("always")
        yield caught


def _raised(caught: list[warnings.WarningMessage], category: type[Warning]) -> bool:
    return any(issubclass(item.category, category) for item in caught)


# ── OLS ──────────────────────────────────────────────────────────────────


def fit_ols(
    x: npt.ArrayLike,
    y: npt.ArrayLike,
    w: npt.ArrayLike | None = None,
    *,
    design: DesignSpec | None = None,
) -> LinearModelFit:
    """Fit weighted least squares with ``statsmodels.WLS``.

    Rows with zero weight are ignored entirely (their design values may be
    missing). Aliased columns are dropped in column order.

    Args:
        x: ``n × p`` design matrix.
        y: Length-``n`` response.
        w: Optional non-negative weights.
        design: Design the matrix came from, for labelling.

    Returns:
        The fitted model.

    Raises:
        InsufficientDataError: Fewer positive-weight rows than columns.
        DataValidationError: Negative weights or non-finite values in used rows.
    """
    xm, yv = _as_matrix(x, y)
    n, p = xm.shape
    weights = np.ones(n) if w is None else np.asarray(w, dtype=float)
    if weights.shape != (n,) or np.any(weights < 0) or not np.all(np.isfinite(weights)):
        msg = "weights must be a finite non-negative vector matching the rows"
        raise DataValidationError(msg)
    used = weights > 0
    n_used = int(used.sum())
    if n_used < p:
        msg = f"n_effective={n_used} is smaller than the design width p={p}"
        raise InsufficientDataError(msg, {"n_effective": n_used, "p": p})

    x_used, y_used, w_used = xm[used], yv[used], weights[used]
    if not (np.all(np.isfinite(x_used)) and np.all(np.isfinite(y_used))):
        msg = "non-finite design or response values in rows used for fitting"
        raise DataValidationError(msg)

    keep = independent_columns(x_used * np.sqrt(w_used)[:, None])
    dropped = tuple(j for j in range(p) if j not in keep)
    _warn_dropped(dropped, design)

    coefficients = np.zeros(p)
    if keep:
        with _captured_warnings():
            result = sm.WLS(y_used, x_used[:, keep], weights=w_used).fit(method="qr")
        coefficients[keep] = np.asarray(result.params, dtype=float)

    fitted = xm @ coefficients
    residuals = y_used - fitted[used]
    rss = float(np.sum(w_used * residuals**2))
    dof = n_used - len(keep)
    return LinearModelFit(
        coefficients=coefficients,
        residual_variance=rss / dof if dof > 0 else 0.0,
        rss=rss,
        n_used=n_used,
        dropped=dropped,
        fitted=fitted,
        design=design,
    )


# ── Logistic ─────────────────────────────────────────────────────────────


def fit_logistic(
    x: npt.ArrayLike,
    r: npt.ArrayLike,
    *,
    design: DesignSpec | None = None,
) -> LogisticModelFit:
    """Fit a logistic regression as a binomial GLM by IRLS.

    The fit counts as converged when the score max-norm is below the
    configured tolerance or IRLS stopped because no coefficient moved by more
    than it. Rounding floors the score of very large samples above any
    fixed threshold, so the second rule is what ends those fits.

    Args:
        x: ``n × p`` design matrix.
        r: Length-``n`` binary response.
        design: Design the matrix came from, for labelling.

    Returns:
        The fitted model.

    Raises:
        InsufficientDataError: ``n < p``.
        SingleClassError: Response has one class only.
        SeparationError: Fitted probabilities hit 0 or 1, or a coefficient
            exceeds the separation threshold.
    """
    settings = get_settings()
    xm, rv = _as_matrix(x, r)
    n, p = xm.shape
    if n < p:
        msg = f"n={n} is smaller than the design width p={p}"
        raise InsufficientDataError(msg, {"n": n, "p": p})
    if not np.all((rv == 0.0) | (rv == 1.0)):
        msg = "logistic response must be binary 0/1"
        raise DataValidationError(msg)
    if rv.min() == rv.max():
        msg = f"single-class response (all {int(rv[0])})"
        raise SingleClassError(msg, {"class": int(rv[0]), "n": n})
    if not np.all(np.isfinite(xm)):
        msg = "non-finite design values"
        raise DataValidationError(msg)

    keep = independent_columns(xm)
    dropped = tuple(j for j in range(p) if j not in keep)
    _warn_dropped(dropped, design)
    if not keep:
        msg = "logistic design has no estimable columns"
        raise DesignError(msg)
    xk = xm[:, keep]

    model = sm.GLM(rv, xk, family=sm.families.Binomial())
    with _captured_warnings() as caught:
        result = model.fit(
            method="IRLS",
            maxiter=settings.irls_max_iterations,
            tol=settings.irls_tolerance,
            tol_criterion="params",
        )
    beta = np.asarray(result.params, dtype=float)
    if _raised(caught, PerfectSeparationWarning):
        label = _column_label(design, keep[int(np.argmax(np.abs(beta)))])
        msg = f"complete separation detected on '{label}' (fitted probabilities 0 or 1)"
        raise SeparationError(msg, {"column": label})
    _check_separation(beta, keep, design, settings.separation_threshold)

    iterations = int(result.fit_history["iteration"])
    score = xk.T @ (rv - special.expit(xk @ beta))
    score_norm = float(np.max(np.abs(score)))
    stopped = bool(result.converged) and not _raised(caught, ConvergenceWarning)
    converged = stopped or score_norm < settings.irls_tolerance
    coefficients = np.zeros(p)
    coefficients[keep] = beta
    logger.debug(
        "Logistic fit: n=%d p=%d iterations=%d converged=%s", n, p, iterations, converged
    )
    return LogisticModelFit(
        coefficients=coefficients,
        converged=converged,
        n_used=n,
        iterations=iterations,
        log_likelihood=float(result.llf),
        score_norm=score_norm,
        dropped=dropped,
        design=design,
    )


def _check_separation(
    beta: FloatArray,
    keep: list[int],
    design: DesignSpec | None,
    threshold: float,
) -> None:
    if beta.size == 0:
        return
    worst = int(np.argmax(np.abs(beta)))
    if abs(beta[worst]) > threshold:
        label = _column_label(design, keep[worst])
        msg = f"complete separation detected on '{label}' (|coef| > {threshold:g})"
        raise SeparationError(msg, {"column": label, "coefficient": float(beta[worst])})


# ── Prediction ───────────────────────────────────────────────────────────


def predict(fit: LinearModelFit | LogisticModelFit, x_new: npt.ArrayLike) -> FloatArray:
    """Linear predictor for OLS, probability for logistic fits.

    Args:
        fit: A fitted model.
        x_new: Matrix (or batch of matrices) whose last axis matches the design.

    Returns:
        Predictions with the leading shape of ``x_new``.

    Raises:
        DesignError: Width mismatch.
    """
    xm = np.asarray(x_new, dtype=float)
    width = fit.coefficients.shape[0]
    if xm.shape[-1] != width:
        msg = f"prediction design has {xm.shape[-1]} columns, model expects {width}"
        raise DesignError(msg)
    eta = xm @ fit.coefficients
    if isinstance(fit, LogisticModelFit):
        return special.expit(eta)
    return eta
