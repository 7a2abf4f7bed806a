"""Design-matrix construction from a ``DesignSpec`` and a column namespace.

A namespace maps reference names to equally shaped arrays: ``(n,)`` for
subject-level designs, ``(n, M)`` for long-format designs. The built
matrix has the namespace shape plus a trailing design axis.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np
import numpy.typing as npt

from aipw.models import DesignSpec, reference_visit, term_parts
from aipw.shared.constants import INTERCEPT
from aipw.shared.errors import DesignError

Namespace = Mapping[str, npt.NDArray[np.float64]]


def build_design(spec: DesignSpec, namespace: Namespace) -> npt.NDArray[np.float64]:
    """Evaluate every term of ``spec`` against ``namespace``.

    Args:
        spec: Ordered design terms.
        namespace: Reference name to array mapping.

    Returns:
        Array of shape ``(*batch, spec.width)``.

    Raises:
        DesignError: A term references a name missing from the namespace.
    """
    missing = sorted(ref for ref in spec.references() if ref not in namespace)
    if missing:
        msg = f"unknown design reference(s) {missing}; available: {sorted(namespace)}"
        raise DesignError(msg, {"missing": missing})
    if not namespace:
        msg = "empty namespace"
        raise DesignError(msg)
    shape = np.shape(next(iter(namespace.values())))
    columns: list[npt.NDArray[np.float64]] = []
    for term in spec.terms:
        if term == INTERCEPT:
            columns.append(np.ones(shape))
            continue
        column = np.ones(shape)
        for reference in term_parts(term):
            column = column * np.asarray(namespace[reference], dtype=float)
        columns.append(column)
    return np.stack(columns, axis=-1)


def check_history_bound(spec: DesignSpec, visit: int, context: str) -> None:
    """Refuse designs that use data from ``visit`` or later.

    Args:
        spec: Design to check.
        visit: First visit (1-based) whose data is off limits.
        context: Label used in the error message.

    Raises:
        DesignError: The design references data observed at or after ``visit``.
    """
    latest = spec.latest_visit()
    if latest >= visit:
        offending = sorted(ref for ref in spec.references() if reference_visit(ref) >= visit)
        msg = f"future-data reference in {context}: {offending} (must precede visit {visit})"
        raise DesignError(msg, {"references": offending, "visit": visit})
