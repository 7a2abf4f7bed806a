"""Centralized numerical and runtime settings loaded from environment variables.

All tunables are defined once here. Other modules should import
``get_settings()`` rather than calling ``os.getenv()`` directly.
"""

from __future__ import annotations

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Library-wide configuration backed by ``AIPW_*`` environment variables.

    Field names are the lowercased env-var names without the prefix.
    ``pydantic-settings`` maps them automatically (case-insensitive).

    Example::

        settings = Settings()  # reads .env + real env
        floor = settings.positivity_floor  # AIPW_POSITIVITY_FLOOR
    """

    model_config = SettingsConfigDict(
        env_prefix="AIPW_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # -- Logging -----------------------------------------------------------

    log: str = "WARNING"
    """Root log level for the CLI (AIPW_LOG)."""

    # -- Dropout weights ---------------------------------------------------

    positivity_floor: float = 0.01
    """Smallest admissible cumulative observation probability."""

    # -- Regression engine -------------------------------------------------

    irls_tolerance: float = 1e-8
    """Score max-norm, or coefficient change, at which logistic IRLS stops."""

    irls_max_iterations: int = 50
    """Iteration cap for logistic IRLS."""

    separation_threshold: float = 30.0
    """Log-odds coefficient magnitude treated as complete separation."""

    rank_tolerance: float = 1e-9
    """Relative QR diagonal below which a design column counts as aliased."""

    # -- Estimating equations ----------------------------------------------

    gee_tolerance: float = 1e-8
    """Max-norm change in beta at which GEE iterations stop."""

    gee_max_iterations: int = 100
    """Iteration cap for the GEE beta / correlation alternation."""

    mmrm_max_iterations: int = 200
    """Quasi-Newton iteration cap for the MMRM likelihood."""

    mmrm_gradient_tolerance: float = 1e-6
    """Gradient max-norm (per subject) accepted as an MMRM optimum."""

    # -- Bootstrap ---------------------------------------------------------

    bootstrap_replicates: int = 300
    """Default replicate count B."""

    bootstrap_max_failure_fraction: float = 0.10
    """Fraction of failed replicates above which the bootstrap is refused."""

    # -- Operational -------------------------------------------------------

    csv_significant_digits: int = 17
    """Significant digits for numeric CSV output (exact float round-trip)."""

    threads: int = 1
    """Default worker count for bootstrap and simulation jobs."""


def get_settings() -> Settings:
    """Return the cached ``Settings`` instance.

    Uses a module-level singleton so the ``.env`` file is read at most
    once per process.

    Returns:
        The global ``Settings`` object.
    """
    return _settings


_settings = Settings()
