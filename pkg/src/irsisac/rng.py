"""Counter-based random streams keyed by (seed, stream name, index).

Each Monte-Carlo trial gets its own Philox stream, so results do not depend
on the order in which trials are evaluated.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key(seed: int, stream: str) -> np.ndarray:
    if seed < 0 or seed > _MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    digest = hashlib.sha256(f"{seed}:{stream}".encode()).digest()
    return np.frombuffer(digest[:16], dtype=np.uint64).copy()


def stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Generator for element ``index`` of the named stream."""
    counter = np.array([0, 0, 0, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=_key(seed, name), counter=counter))
