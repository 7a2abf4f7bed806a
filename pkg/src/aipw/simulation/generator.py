"""Synthetic full data, sequential logistic dropout and scenario truth.

Full data follow the random intercept-and-slope model

    Yᵢⱼ = b₀ᵢ + b₁ᵢ tⱼ + β₀ + β₁ x₁ᵢ + β₂ x₂ᵢ + β₃ x₂ᵢ tⱼ + εᵢⱼ

with x₁ normal, x₂ Bernoulli and (b₀, b₁) bivariate normal. Dropout at
visit j happens with probability ``expit(γ₀ + Σ γₗ yₗ − γ_arm x₂)`` among
subjects still on study, so patterns are monotone by construction.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from aipw.glm_core import build_design, fit_ols
from aipw.longitudinal_data import LongitudinalDataset
from aipw.models import DropoutConfig, GeneratorConfig
from aipw.shared.constants import ESTIMAND_LAST_MEAN, ORACLE_SUBJECTS
from aipw.shared.errors import ModelSpecificationError
from aipw.shared.seeding import child_rng, config_hash

from .scenarios import ANALYSIS_DESIGN, ARM_COVARIATE, CONTINUOUS_COVARIATE

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

ORACLE_SEED = 7_919


@dataclass(frozen=True, slots=True)
class FullData:
    """Complete panel and the latent quantities behind it.

    Attributes:
        dataset: Panel without missing outcomes.
        random_effects: ``N × 2`` draws of (b₀, b₁).
    """

    dataset: LongitudinalDataset
    random_effects: FloatArray


def subject_ids(n: int, prefix: str = "s") -> tuple[str, ...]:
    """Zero-padded identifiers whose lexical order matches their index."""
    width = max(4, len(str(n)))
    return tuple(f"{prefix}{i:0{width}d}" for i in range(1, n + 1))


def generate_full(cfg: GeneratorConfig, rng: np.random.Generator) -> FullData:
    """Draw one complete dataset.

    Covariates, random effects and residuals are drawn in that order.
    """
    n = cfg.n
    times = np.asarray(cfg.time_codes, dtype=float)
    x1 = rng.normal(cfg.x1_mean, cfg.x1_sd, n)
    x2 = (rng.random(n) < cfg.x2_prob).astype(float)
    effects = rng.multivariate_normal(
        np.asarray(cfg.random_effect_mean), np.asarray(cfg.random_effect_cov), size=n
    )
    noise = rng.normal(0.0, cfg.residual_sd, (n, times.shape[0]))
    b0, b1, b2, b3 = cfg.beta
    outcomes = (
        effects[:, [0]]
        + effects[:, [1]] * times
        + b0
        + b1 * x1[:, None]
        + b2 * x2[:, None]
        + b3 * x2[:, None] * times
        + noise
    )
    groups = tuple(f"arm{int(v)}" for v in x2)
    dataset = LongitudinalDataset.build(
        subject_ids(n),
        outcomes,
        times,
        baseline={CONTINUOUS_COVARIATE: x1, ARM_COVARIATE: x2},
        groups=groups,
    )
    return FullData(dataset=dataset, random_effects=effects)


def apply_dropout(
    full: LongitudinalDataset, dcfg: DropoutConfig, rng: np.random.Generator
) -> LongitudinalDataset:
    """Censor a complete panel by sequential logistic dropout.

    One uniform per subject is drawn at every visit, on study or not, so
    the stream consumed does not depend on earlier dropout.

    Raises:
        ModelSpecificationError: The mechanism does not match the visit
            count, or uses the arm and the panel has no arm covariate.
    """
    m = full.n_visits
    if len(dcfg.visits) != m - 1:
        msg = f"dropout mechanism covers {len(dcfg.visits)} visit(s), panel has {m - 1}"
        raise ModelSpecificationError(msg)
    uses_arm = any(visit.arm != 0.0 for visit in dcfg.visits)
    if uses_arm and ARM_COVARIATE not in full.baseline_names:
        msg = f"dropout mechanism uses '{ARM_COVARIATE}', which the panel lacks"
        raise ModelSpecificationError(msg)
    arm = full.covariate(ARM_COVARIATE) if uses_arm else np.zeros(full.n_subjects)

    outcomes = np.array(full.outcomes)
    on_study = np.ones(full.n_subjects, dtype=bool)
    for j, visit in enumerate(dcfg.visits, start=2):
        draws = rng.random(full.n_subjects)
        logit = np.full(full.n_subjects, visit.intercept) - visit.arm * arm
        for lag, coefficient in enumerate(visit.history):
            logit = logit + coefficient * np.where(on_study, outcomes[:, lag], 0.0)
        dropped = on_study & (draws < expit(logit))
        outcomes[dropped, j - 1 :] = np.nan
        on_study &= ~dropped
    logger.debug("Dropout by visit: %s", np.isnan(outcomes).mean(axis=0).round(3).tolist())
    return full.with_outcomes(outcomes)


def analytic_truth(cfg: GeneratorConfig) -> dict[str, float]:
    """Population values of the analysis coefficients and the last-visit mean."""
    b0, b1, b2, b3 = cfg.beta
    mu0, mu1 = cfg.random_effect_mean
    t_last = cfg.time_codes[-1]
    p = cfg.x2_prob
    return {
        ESTIMAND_LAST_MEAN: mu0 + mu1 * t_last + b0 + b1 * cfg.x1_mean + (b2 + b3 * t_last) * p,
        "1": mu0 + b0,
        CONTINUOUS_COVARIATE: b1,
        ARM_COVARIATE: b2,
        "t": mu1,
        f"{ARM_COVARIATE}:t": b3,
    }


@functools.lru_cache(maxsize=16)
def _oracle(payload: str, n_large: int, seed: int) -> tuple[tuple[str, float], ...]:
    cfg = GeneratorConfig.model_validate_json(payload).model_copy(update={"n": n_large})
    ds = generate_full(cfg, child_rng(seed)).dataset
    x = build_design(ANALYSIS_DESIGN, ds.long_namespace())
    fit = fit_ols(
        x.reshape(-1, ANALYSIS_DESIGN.width), ds.outcomes.reshape(-1), design=ANALYSIS_DESIGN
    )
    truth = {ESTIMAND_LAST_MEAN: float(ds.outcomes[:, -1].mean())}
    truth.update(
        (term, float(value))
        for term, value in zip(ANALYSIS_DESIGN.terms, fit.coefficients, strict=True)
    )
    return tuple(truth.items())


def true_values_oracle(
    cfg: GeneratorConfig, n_large: int = ORACLE_SUBJECTS, *, seed: int = ORACLE_SEED
) -> dict[str, float]:
    """Scenario truth from one very large complete dataset.

    The last-visit mean is the empirical column mean; coefficients come from
    least squares of the analysis model on the full panel. Results are
    cached per configuration hash.
    """
    logger.debug("Oracle for generator %s (n=%d)", config_hash(cfg.model_dump()), n_large)
    return dict(_oracle(cfg.model_dump_json(), n_large, seed))
