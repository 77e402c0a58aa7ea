"""Counter-based random streams.

Samples are drawn in fixed-size blocks; block ``b`` of seed ``k`` always
comes from a Philox stream keyed by ``k`` whose counter starts at ``b`` in
its third word. The draws of a block therefore never depend on which worker
produced it or in what order blocks were scheduled.
"""
from __future__ import annotations

import numpy as np

U64 = (1 << 64) - 1


def block_generator(seed: int, block: int) -> np.random.Generator:
    if seed < 0 or seed > U64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    counter = np.array([0, 0, block, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))
