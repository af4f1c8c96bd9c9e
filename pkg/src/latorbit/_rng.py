"""Counter-based random streams keyed by (seed, index, stream)."""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def rng_for(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Philox generator whose output depends only on its three keys.

    Samples drawn for ``index`` are therefore independent of how work is
    scheduled across workers.
    """
    key = np.array([int(seed) & _MASK, int(stream) & _MASK], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(index) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
