"""Counter-based random substreams.

Every independent unit of work (a parameter draw, a replication, a grid
point) gets its own ``numpy.random.Generator`` backed by Philox. The Philox
key is derived from ``(seed, tag)`` and the counter's third word holds the
unit index, so a unit's draws depend only on ``(seed, tag, index)`` and never
on how work is split across threads.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1

# stream tags; distinct tags never share a Philox key
PRIOR_AND_BATCH = 1
PILOT = 2
OBSERVED = 3
MOMENTS = 4
MCMC = 5
SCAN = 6
WEIGHT_REPS = 7


def _tag_word(tag: int | str) -> int:
    if isinstance(tag, int):
        return tag & _MASK64
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, tag: int | str, index: int = 0) -> np.random.Generator:
    """Generator for unit ``index`` of stream ``tag`` under master ``seed``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    key = np.array([seed & _MASK64, _tag_word(tag)], dtype=np.uint64)
    counter = np.array([0, 0, index & _MASK64, (index >> 64) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def derive_seed(seed: int, *path: int | str) -> int:
    """Deterministic child seed (u64) for nested experiments."""
    h = hashlib.sha256(str(seed).encode("utf-8"))
    for part in path:
        h.update(b"/")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")
