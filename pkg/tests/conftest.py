"""Shared test fixtures for aipw-longitudinal."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure src/ is on the path so the aipw package imports without installation
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from aipw.longitudinal_data import LongitudinalDataset
from aipw.models import (
    DropoutConfig,
    GeneratorConfig,
    ScenarioCell,
    Specification,
    VisitDropout,
)
from aipw.pipeline import MethodPlan
from aipw.shared.seeding import child_rng
from aipw.simulation import apply_dropout, cell_plan, generate_full

# ---------------------------------------------------------------------------
# Protocol fakes
# ---------------------------------------------------------------------------


class SpyReporter:
    """Spy satisfying the ``ProgressReporter`` protocol.

    Captures every ``step_start`` / ``step_end`` call for assertions.
    """

    def __init__(self) -> None:
        self.events: list[dict[str, str]] = []

    def step_start(self, step: str) -> None:
        """Record a step-start event."""
        self.events.append({"step": step, "status": "started"})

    def step_end(self, step: str) -> None:
        """Record a step-end event."""
        self.events.append({"step": step, "status": "completed"})


# ---------------------------------------------------------------------------
# Data builders
# ---------------------------------------------------------------------------

# Dropout driven by outcome history only, so no arm is ever separated.
HISTORY_DROPOUT = DropoutConfig(
    visits=(
        VisitDropout(intercept=-4.0, history=(0.2,)),
        VisitDropout(intercept=-3.5, history=(0.0, 0.15)),
    ),
)


def make_complete_panel(n: int = 300, seed: int = 11) -> LongitudinalDataset:
    """Complete three-visit panel from the default generator."""
    return generate_full(GeneratorConfig(n=n), child_rng(seed)).dataset


def make_dropout_panel(n: int = 400, seed: int = 11) -> LongitudinalDataset:
    """Three-visit panel with monotone MAR dropout on the outcome history."""
    rng = child_rng(seed)
    full = generate_full(GeneratorConfig(n=n), rng).dataset
    return apply_dropout(full, HISTORY_DROPOUT, rng)


def make_plan(estimands: tuple[str, ...] = ("mean_last", "x1", "x2", "t", "x2:t")) -> MethodPlan:
    """Correct working models for the default generator."""
    cell = ScenarioCell(y_model=Specification.CORRECT, p_model=Specification.CORRECT)
    return cell_plan(cell, estimands=estimands)


def make_tiny_panel(patterns: list[list[float]]) -> LongitudinalDataset:
    """Hand-written panel: one row of outcomes per subject, NaN for missing."""
    n = len(patterns)
    m = len(patterns[0])
    return LongitudinalDataset.build(
        tuple(f"s{i:02d}" for i in range(1, n + 1)),
        np.asarray(patterns, dtype=float),
        np.arange(m, dtype=float),
        baseline={"x1": np.linspace(0.0, 1.0, n)},
    )


# ---------------------------------------------------------------------------
# Pytest fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def spy_reporter() -> SpyReporter:
    """Fresh progress spy."""
    return SpyReporter()


@pytest.fixture(scope="session")
def complete_panel() -> LongitudinalDataset:
    """Complete 300-subject panel."""
    return make_complete_panel()


@pytest.fixture(scope="session")
def dropout_panel() -> LongitudinalDataset:
    """400-subject panel with monotone dropout."""
    return make_dropout_panel()


@pytest.fixture(scope="session")
def correct_plan() -> MethodPlan:
    """Correctly specified working models."""
    return make_plan()
