"""Counter-based random streams.

Pulse ``i`` always draws from the stream keyed by ``(seed, i // BLOCK)``, so
results do not depend on how blocks are scheduled across workers.
"""
from __future__ import annotations

import numpy as np

BLOCK = 1 << 16
_MASK64 = (1 << 64) - 1


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by the master seed and the block index.

    ``stream`` separates unrelated uses of the same seed (pulses vs. noise).
    """
    key = np.array([int(seed) & _MASK64, ((int(stream) << 48) ^ int(block)) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def blocks(n: int, size: int = BLOCK):
    """Yield ``(block_index, start, stop)`` covering ``range(n)``."""
    for b, start in enumerate(range(0, n, size)):
        yield b, start, min(start + size, n)
