"""Protocol interfaces for progress reporting.

Long-running jobs (bootstrap, Monte Carlo grids) report progress through
these protocols so library code stays free of any output mechanism.
"""

from __future__ import annotations

import logging
import time
from typing import Protocol, runtime_checkable

logger = logging.getLogger(__name__)


@runtime_checkable
class ProgressReporter(Protocol):
    """Reports step-level progress for long-running jobs."""

    def step_start(self, step: str) -> None:
        """Signal that a named step has started.

        Args:
            step: Human-readable step label.
        """
        ...

    def step_end(self, step: str) -> None:
        """Signal that a named step has completed.

        Args:
            step: Human-readable step label (must match a prior start).
        """
        ...


# ---------------------------------------------------------------------------
# Concrete implementations
# ---------------------------------------------------------------------------


class NoOpReporter:
    """ProgressReporter that silently discards all events.

    Useful in tests and library calls where nobody is watching.
    """

    def step_start(self, step: str) -> None:
        """No-op."""

    def step_end(self, step: str) -> None:
        """No-op."""


class LoggingReporter:
    """ProgressReporter that writes start/end events to the module logger.

    Args:
        level: Logging level used for the events.
    """

    def __init__(self, level: int = logging.INFO) -> None:
        self._level = level
        self._start_times: dict[str, float] = {}

    def step_start(self, step: str) -> None:
        """Record start time and log a *started* event.

        Args:
            step: Human-readable step label.
        """
        self._start_times[step] = time.perf_counter()
        logger.log(self._level, "%s started", step)

    def step_end(self, step: str) -> None:
        """Log a *completed* event with its duration.

        Args:
            step: Human-readable step label (must match a prior start).
        """
        start_time = self._start_times.pop(step, None)
        duration_ms = int((time.perf_counter() - start_time) * 1000) if start_time else -1
        logger.log(self._level, "%s completed in %d ms", step, duration_ms)
