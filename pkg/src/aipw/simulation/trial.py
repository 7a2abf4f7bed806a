"""Two-arm trial generator with change-from-baseline outcomes.

Each subject follows a random linear trajectory from zero whose slope
depends on arm and baseline score; dropout at each follow-up visit is
logistic in the previous outcome with arm-specific intercepts, so
subjects who worsen faster leave earlier.
"""

from __future__ import annotations

import logging
from typing import Final

import numpy as np
from scipy.special import expit

from aipw.longitudinal_data import LongitudinalDataset
from aipw.models import DesignSpec, GeeSpec, HistoryDesign, TrialConfig
from aipw.pipeline import MethodPlan, lsmean_estimand

from .generator import subject_ids

logger = logging.getLogger(__name__)

TRIAL_ARM: Final = "arm"
TRIAL_SCORE: Final = "score"
PLACEBO: Final = "placebo"
ACTIVE: Final = "active"

TRIAL_DESIGN: Final = DesignSpec.parse("1 + arm + score + t + arm:t")


def generate_trial(cfg: TrialConfig, rng: np.random.Generator) -> LongitudinalDataset:
    """Draw a trial panel; the first ``n_per_arm`` subjects are placebo."""
    n = 2 * cfg.n_per_arm
    times = np.asarray(cfg.time_codes, dtype=float)
    arm = (np.arange(n) >= cfg.n_per_arm).astype(float)
    score = rng.normal(cfg.score_mean, cfg.score_sd, n)
    slopes = (
        cfg.slope
        + cfg.arm_slope * arm
        + cfg.score_slope * (score - cfg.score_mean)
        + rng.normal(0.0, cfg.slope_sd, n)
    )
    outcomes = slopes[:, None] * times + rng.normal(0.0, cfg.residual_sd, (n, times.shape[0]))

    intercepts = np.where(
        arm[:, None] == 1.0,
        np.asarray(cfg.active_intercepts),
        np.asarray(cfg.placebo_intercepts),
    )
    on_study = np.ones(n, dtype=bool)
    for j in range(2, times.shape[0] + 1):
        draws = rng.random(n)
        previous = np.where(on_study, outcomes[:, j - 2], 0.0)
        dropped = on_study & (draws < expit(intercepts[:, j - 2] + cfg.history_coef * previous))
        outcomes[dropped, j - 1 :] = np.nan
        on_study &= ~dropped

    groups = tuple(ACTIVE if a == 1.0 else PLACEBO for a in arm)
    logger.info(
        "Trial dropout by last visit: placebo %.1f%%, active %.1f%%",
        100.0 * np.isnan(outcomes[arm == 0.0, -1]).mean(),
        100.0 * np.isnan(outcomes[arm == 1.0, -1]).mean(),
    )
    return LongitudinalDataset.build(
        subject_ids(n, prefix="t"),
        outcomes,
        times,
        baseline={TRIAL_ARM: arm, TRIAL_SCORE: score},
        groups=groups,
    )


def trial_truth(cfg: TrialConfig) -> dict[str, float]:
    """Population slope, arm-by-time coefficient and per-visit arm differences."""
    truth = {"t": cfg.slope, f"{TRIAL_ARM}:t": cfg.arm_slope}
    truth.update((lsmean_estimand(t), cfg.arm_slope * t) for t in cfg.time_codes[1:])
    return truth


def trial_plan(cfg: TrialConfig) -> MethodPlan:
    """Working models for the trial report: arm and score everywhere."""
    history = HistoryDesign(baseline=(TRIAL_ARM, TRIAL_SCORE))
    analysis = GeeSpec(design=TRIAL_DESIGN)
    estimands = (
        "t",
        f"{TRIAL_ARM}:t",
        *(lsmean_estimand(t) for t in cfg.time_codes[1:]),
    )
    return MethodPlan(
        hazard=history,
        outcome=history,
        mean=TRIAL_DESIGN,
        mmrm=TRIAL_DESIGN,
        analysis=analysis,
        gee=analysis,
        wgee=analysis,
        estimands=estimands,
        arm=TRIAL_ARM,
    )
