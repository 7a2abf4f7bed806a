"""Counter-based seeding for order-independent random streams."""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np


def child_rng(master_seed: int, *counters: int) -> np.random.Generator:
    """Return a generator keyed by ``(master_seed, *counters)``.

    The stream depends only on the key, never on how many other streams
    were drawn before it, so replicates can run in any order or process.

    Args:
        master_seed: Non-negative master seed.
        *counters: Replicate / repeat indices.

    Returns:
        An independent ``numpy`` generator.
    """
    return np.random.default_rng(np.random.SeedSequence([master_seed, *counters]))


def child_seed(master_seed: int, *counters: int) -> int:
    """Derive a 63-bit integer seed from ``(master_seed, *counters)``."""
    state = np.random.SeedSequence([master_seed, *counters]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


def config_hash(payload: Any) -> str:  # noqa: ANN401
    """Stable short hash of a JSON-serializable payload.

    Args:
        payload: Any object ``json.dumps`` accepts (keys are sorted).

    Returns:
        First 16 hex characters of the SHA-256 digest.
    """
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
