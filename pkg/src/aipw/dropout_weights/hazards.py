"""Per-visit discrete-time dropout hazard models.

The hazard at visit j is the probability of being unobserved at j given
observation at j-1. Model j is a logistic regression of ``1 - R[:, j]`` on
the history through j-1, fit on the subjects at risk (``R[:, j-1] = 1``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import pandas as pd

from aipw.glm_core import (
    Family,
    LogisticModelFit,
    build_design,
    check_history_bound,
    fit_logistic,
    forward_select,
    predict,
)
from aipw.longitudinal_data import LongitudinalDataset, MissingnessProfile
from aipw.models import (
    DesignSpec,
    EmptyHazardPolicy,
    HistoryDesign,
    SelectionMode,
    reference_visit,
    term_parts,
)
from aipw.shared.errors import ConvergenceError, FingerprintMismatchError, SingleClassError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class HazardModelSet:
    """Fitted hazard models for visits 2..M.

    Attributes:
        models: One fit per visit 2..M, ``None`` where the hazard is pinned to 0.
        designs: Design of each model (after any selection).
        dataset_fingerprint: Fingerprint of the dataset the models were fit on.
    """

    models: tuple[LogisticModelFit | None, ...]
    designs: tuple[DesignSpec, ...]
    dataset_fingerprint: str

    @property
    def n_visits(self) -> int:
        """Number of visits M covered by the set."""
        return len(self.models) + 1

    @property
    def pinned_visits(self) -> tuple[int, ...]:
        """1-based visits whose hazard is pinned to zero."""
        return tuple(visit for visit, fit in enumerate(self.models, start=2) if fit is None)

    def model(self, visit: int) -> LogisticModelFit | None:
        """Hazard model for a 1-based visit in 2..M."""
        return self.models[visit - 2]

    def design(self, visit: int) -> DesignSpec:
        """Design for a 1-based visit in 2..M."""
        return self.designs[visit - 2]

    def coefficients_frame(self) -> pd.DataFrame:
        """Diagnostics table ``visit, term, coefficient, n_used``; pinned visits are skipped."""
        rows = [
            {"visit": visit, "term": term, "coefficient": float(value), "n_used": fit.n_used}
            for visit, fit in enumerate(self.models, start=2)
            if fit is not None
            for term, value in zip(self.design(visit).terms, fit.coefficients, strict=True)
        ]
        return pd.DataFrame.from_records(rows, columns=["visit", "term", "coefficient", "n_used"])


def _is_history_term(term: str) -> bool:
    return any(reference_visit(part) > 0 for part in term_parts(term))


def _select(spec: DesignSpec, namespace: dict[str, FloatArray], event: FloatArray) -> DesignSpec:
    base_terms = tuple(term for term in spec.terms if not _is_history_term(term))
    candidates = [term for term in spec.terms if _is_history_term(term)]
    base = DesignSpec(terms=base_terms) if base_terms else DesignSpec(terms=("1",))
    return forward_select(base, candidates, namespace, event, family=Family.BINOMIAL)


def fit_hazards(
    ds: LongitudinalDataset,
    profile: MissingnessProfile,
    design: HistoryDesign,
    *,
    empty_hazards: EmptyHazardPolicy = EmptyHazardPolicy.ERROR,
    selection: SelectionMode = SelectionMode.NONE,
) -> HazardModelSet:
    """Fit one logistic hazard model per visit 2..M.

    Args:
        ds: Monotone dataset.
        profile: Its missingness profile.
        design: History design; visit j uses ``design.at_depth(j - 1)`` unless
            overridden under key ``str(j)``.
        empty_hazards: ``PIN_ZERO`` fixes the hazard at 0 for visits where no
            at-risk subject drops out instead of raising.
        selection: ``FORWARD`` selects history terms by binomial AIC, keeping
            the baseline terms.

    Returns:
        The fitted hazard models.

    Raises:
        DesignError: A design references data from visit j or later.
        SingleClassError: No dropout (or only dropout) at some visit.
        SeparationError: Separation in some hazard model.
        ConvergenceError: IRLS did not converge.
    """
    namespace = ds.history_namespace()
    models: list[LogisticModelFit | None] = []
    designs: list[DesignSpec] = []
    for visit in range(2, ds.n_visits + 1):
        spec = design.at_depth(visit - 1, override_key=str(visit))
        check_history_bound(spec, visit, f"hazard model for visit {visit}")
        at_risk = profile.observed[:, visit - 2] == 1
        event = (1 - profile.observed[at_risk, visit - 1]).astype(float)
        n_events = int(event.sum())
        if n_events == 0 and empty_hazards is EmptyHazardPolicy.PIN_ZERO:
            logger.warning("No dropout at visit %d; hazard pinned to zero", visit)
            models.append(None)
            designs.append(spec)
            continue
        if n_events in (0, event.shape[0]):
            at_risk_count = event.shape[0]
            msg = (
                f"single-class dropout indicator at visit {visit} "
                f"({n_events} of {at_risk_count} drop)"
            )
            raise SingleClassError(
                msg, {"visit": visit, "events": n_events, "at_risk": at_risk_count}
            )

        at_risk_namespace = {name: column[at_risk] for name, column in namespace.items()}
        if selection is SelectionMode.FORWARD:
            spec = _select(spec, at_risk_namespace, event)
        x = build_design(spec, at_risk_namespace)
        fit = fit_logistic(x, event, design=spec)
        if not fit.converged:
            msg = f"hazard model for visit {visit} did not converge in {fit.iterations} iterations"
            raise ConvergenceError(msg, {"visit": visit, "score_norm": fit.score_norm})
        models.append(fit)
        designs.append(spec)
        logger.debug(
            "Hazard visit %d: %d at risk, %d events, terms %s",
            visit,
            event.shape[0],
            n_events,
            list(spec.terms),
        )

    logger.info("Fitted %d hazard model(s)", sum(model is not None for model in models))
    return HazardModelSet(
        models=tuple(models), designs=tuple(designs), dataset_fingerprint=ds.fingerprint()
    )


def predict_hazards(
    hms: HazardModelSet, ds: LongitudinalDataset, profile: MissingnessProfile
) -> FloatArray:
    """Padded ``N × (M+1)`` hazard matrix.

    Column 0 (visit 1) and column M (padding) are 0. Column j-1 holds the
    predicted hazard for subjects at risk at visit j and 0 beyond ``J + 1``.

    Raises:
        FingerprintMismatchError: Models were fit on another dataset.
    """
    if hms.dataset_fingerprint != ds.fingerprint():
        msg = "hazard models were fit on a different dataset"
        raise FingerprintMismatchError(msg)
    namespace = ds.history_namespace()
    lam = np.zeros((ds.n_subjects, ds.n_visits + 1))
    for visit in range(2, ds.n_visits + 1):
        fit = hms.model(visit)
        if fit is None:
            continue
        at_risk = profile.observed[:, visit - 2] == 1
        x = build_design(hms.design(visit), namespace)
        lam[at_risk, visit - 1] = predict(fit, x[at_risk])
    return lam
