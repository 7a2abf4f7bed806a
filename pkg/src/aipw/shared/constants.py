"""Method, estimand and provenance constants shared across packages.

Defines the supported method identifiers, estimand labels, provenance
tags, reserved design reference names and the simulation defaults used
by the scenario grid.
"""

from typing import Final

# ── Methods ──────────────────────────────────────────────────────────────

METHOD_PAIK: Final = "paik"
METHOD_AIPW_I: Final = "aipw-i"
METHOD_AIPW_S: Final = "aipw-s"
METHOD_BR_STAR: Final = "br-star"
METHOD_MMRM: Final = "mmrm"
METHOD_GEE: Final = "gee"
METHOD_WGEE: Final = "wgee"

IMPUTATION_METHODS: Final[tuple[str, ...]] = (
    METHOD_PAIK,
    METHOD_AIPW_I,
    METHOD_AIPW_S,
    METHOD_BR_STAR,
)

SUPPORTED_METHODS: Final[tuple[str, ...]] = (
    *IMPUTATION_METHODS,
    METHOD_MMRM,
    METHOD_GEE,
    METHOD_WGEE,
)

# Display labels used in metrics tables (row order of the simulation tables)
METHOD_LABELS: Final[dict[str, str]] = {
    METHOD_BR_STAR: "BR*",
    METHOD_AIPW_I: "AIPW-I",
    METHOD_AIPW_S: "AIPW-S",
    METHOD_PAIK: "Paik",
    METHOD_MMRM: "MMRM",
    METHOD_WGEE: "WGEE",
    METHOD_GEE: "GEE-IND",
}

SCENARIO_METHOD_ORDER: Final[tuple[str, ...]] = tuple(METHOD_LABELS)

# ── Estimands ────────────────────────────────────────────────────────────

ESTIMAND_LAST_MEAN: Final = "mean_last"
ESTIMAND_TIME: Final = "t"
ESTIMAND_ARM: Final = "x2"
ESTIMAND_ARM_TIME: Final = "x2:t"
LSMEAN_PREFIX: Final = "lsmean@"

SCENARIO_ESTIMANDS: Final[tuple[str, ...]] = (
    ESTIMAND_LAST_MEAN,
    ESTIMAND_TIME,
    ESTIMAND_ARM,
    ESTIMAND_ARM_TIME,
)

# ── Provenance tags ──────────────────────────────────────────────────────

PROVENANCE_OBSERVED: Final = "observed"
PROVENANCE_IMPUTED_PREFIX: Final = "imputed:"
PROVENANCE_GAP_FILL: Final = "imputed:gap-fill"

# ── Reserved design references ───────────────────────────────────────────

INTERCEPT: Final = "1"
TIME_REFERENCE: Final = "t"
PI_REFERENCE: Final = "pi"
PI_INVERSE_REFERENCE: Final = "pi_inv"
OUTCOME_PREFIX: Final = "y"
VISIT_INDICATOR_PREFIX: Final = "visit"
TIME_VARYING_SEPARATOR: Final = "@"

# ── Simulation defaults (desk scale) ─────────────────────────────────────

DEFAULT_REPEATS: Final = 200
DEFAULT_SIM_BOOTSTRAP: Final = 100
DEFAULT_SIM_SUBJECTS: Final = 500
DEFAULT_ALPHA: Final = 0.05
FLAGGED_FAILURE_FRACTION: Final = 0.10
ORACLE_SUBJECTS: Final = 200_000
