"""Pydantic models for regression design specifications.

A design is an ordered list of term strings. ``"1"`` (or ``"intercept"``)
is the intercept, ``"a:b"`` is the product of references ``a`` and ``b``,
anything else is a single reference resolved against a column namespace.

Reference naming:

- baseline covariates by their CSV column name (``x1``)
- outcome history ``y<k>`` for visit ``k`` (1-based)
- time-varying covariates ``<name>@<k>``
- long-format references ``t`` and ``visit<k>`` indicators
- BR* references ``pi`` and ``pi_inv``
"""

from __future__ import annotations

import re
from typing import Final

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from aipw.shared.constants import (
    INTERCEPT,
    OUTCOME_PREFIX,
    TIME_VARYING_SEPARATOR,
)

_INTERCEPT_ALIASES: Final = frozenset({"1", "intercept", "(intercept)"})
_OUTCOME_PATTERN: Final = re.compile(rf"^{OUTCOME_PREFIX}(\d+)$")
_TIME_VARYING_PATTERN: Final = re.compile(rf"^(.+){TIME_VARYING_SEPARATOR}(\d+)$")


def term_parts(term: str) -> tuple[str, ...]:
    """Split a term into its references (empty for the intercept)."""
    if term == INTERCEPT:
        return ()
    return tuple(term.split(":"))


def reference_visit(reference: str) -> int:
    """Return the 1-based visit a reference is observed at (0 = baseline).

    Args:
        reference: A single reference name.

    Returns:
        ``k`` for ``y<k>`` and ``<name>@<k>``, otherwise 0.
    """
    match = _OUTCOME_PATTERN.match(reference) or _TIME_VARYING_PATTERN.match(reference)
    if match is None:
        return 0
    return int(match.group(match.lastindex or 1))


def outcome_reference(visit: int) -> str:
    """Name of the outcome at a 1-based visit."""
    return f"{OUTCOME_PREFIX}{visit}"


def time_varying_reference(name: str, visit: int) -> str:
    """Name of a time-varying covariate at a 1-based visit."""
    return f"{name}{TIME_VARYING_SEPARATOR}{visit}"


# ── Design specification ─────────────────────────────────────────────────


class DesignSpec(BaseModel):
    """Ordered design-matrix recipe."""

    model_config = ConfigDict(frozen=True)

    terms: tuple[str, ...] = Field(min_length=1, description="Ordered design terms")

    @field_validator("terms", mode="before")
    @classmethod
    def _normalize_terms(cls, value: object) -> object:
        """Strip whitespace and map intercept aliases to ``"1"``."""
        if isinstance(value, str):
            value = [part for part in value.split("+") if part.strip()]
        if not isinstance(value, (list, tuple)):
            return value
        normalized: list[str] = []
        for raw in value:
            term = ":".join(piece.strip() for piece in str(raw).split(":"))
            normalized.append(INTERCEPT if term.lower() in _INTERCEPT_ALIASES else term)
        return tuple(normalized)

    @model_validator(mode="after")
    def _validate_terms(self) -> DesignSpec:
        """Enforce a single intercept, unique terms and well-formed interactions."""
        if self.terms.count(INTERCEPT) > 1:
            msg = "intercept may appear at most once"
            raise ValueError(msg)
        if len(set(self.terms)) != len(self.terms):
            msg = f"duplicate terms in design: {list(self.terms)}"
            raise ValueError(msg)
        for term in self.terms:
            parts = term_parts(term)
            if any(not part for part in parts):
                msg = f"empty reference in term '{term}'"
                raise ValueError(msg)
            if len(parts) > 1 and len(set(parts)) != len(parts):
                msg = f"interaction '{term}' must reference distinct terms"
                raise ValueError(msg)
        return self

    @classmethod
    def parse(cls, formula: str) -> DesignSpec:
        """Build a design from ``"1 + x1 + x2:t"`` notation."""
        return cls(terms=formula)  # pyright: ignore[reportArgumentType]

    @property
    def width(self) -> int:
        """Number of design columns."""
        return len(self.terms)

    @property
    def has_intercept(self) -> bool:
        """Whether the design carries an intercept column."""
        return INTERCEPT in self.terms

    def references(self) -> frozenset[str]:
        """All distinct references used by the design's terms."""
        return frozenset(part for term in self.terms for part in term_parts(term))

    def latest_visit(self) -> int:
        """Latest visit any reference depends on (0 = baseline only)."""
        return max((reference_visit(ref) for ref in self.references()), default=0)

    def extended(self, *terms: str) -> DesignSpec:
        """Return a copy with extra terms appended (existing ones skipped)."""
        extra = [term for term in terms if term not in self.terms]
        return DesignSpec(terms=(*self.terms, *extra))

    def without(self, *references: str) -> DesignSpec:
        """Return a copy without any term that uses one of ``references``."""
        drop = set(references)
        kept = tuple(term for term in self.terms if not drop & set(term_parts(term)))
        return DesignSpec(terms=kept or (INTERCEPT,))


# ── History designs ──────────────────────────────────────────────────────


class HistoryDesign(BaseModel):
    """Design family over the observed history L̄ₛ, expanded per depth.

    ``at_depth(s)`` yields ``1 + baseline + y1..ys + z@1..z@s``. Overrides
    replace the expansion for a specific key: the visit index for hazard
    models (``"3"``) or ``"k,s"`` for sequential regressions.
    """

    model_config = ConfigDict(frozen=True)

    baseline: tuple[str, ...] = Field(default=(), description="Baseline covariate names")
    time_varying: tuple[str, ...] = Field(default=(), description="Time-varying covariate names")
    include_history: bool = Field(default=True, description="Include outcome history terms")
    first_history_visit: int = Field(
        default=1, ge=1, description="Earliest outcome visit entered as history"
    )
    intercept: bool = Field(default=True, description="Include an intercept")
    extra_terms: tuple[str, ...] = Field(
        default=(), description="Additional baseline-level terms such as interactions"
    )
    overrides: dict[str, DesignSpec] = Field(
        default_factory=dict, description="Explicit designs keyed by visit or 'k,s'"
    )

    def base_terms(self) -> tuple[str, ...]:
        """Intercept, baseline covariates and extra terms."""
        head = (INTERCEPT,) if self.intercept else ()
        return (*head, *self.baseline, *self.extra_terms)

    def history_terms(self, depth: int) -> tuple[str, ...]:
        """Outcome and time-varying history terms up to ``depth``."""
        terms: list[str] = []
        for visit in range(1, depth + 1):
            if self.include_history and visit >= self.first_history_visit:
                terms.append(outcome_reference(visit))
            terms.extend(time_varying_reference(name, visit) for name in self.time_varying)
        return tuple(terms)

    def at_depth(self, depth: int, *, override_key: str | None = None) -> DesignSpec:
        """Expand the design over the history observed through ``depth``.

        Args:
            depth: Last visit whose data the design may use.
            override_key: Key looked up in ``overrides`` first.

        Returns:
            The expanded (or overriding) design.
        """
        if override_key is not None and override_key in self.overrides:
            return self.overrides[override_key]
        terms = (*self.base_terms(), *self.history_terms(depth))
        return DesignSpec(terms=terms or (INTERCEPT,))

    def without_baseline(self, *names: str) -> HistoryDesign:
        """Copy with the named baseline covariates (and terms using them) removed."""
        drop = set(names)
        return self.model_copy(
            update={
                "baseline": tuple(n for n in self.baseline if n not in drop),
                "extra_terms": tuple(
                    t for t in self.extra_terms if not drop & set(term_parts(t))
                ),
            }
        )
