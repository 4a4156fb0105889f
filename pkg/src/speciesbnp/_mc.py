"""Seed-deterministic Monte Carlo driver.

Replicates are split into fixed-size blocks and block ``i`` draws from the
stream ``rng.derive(i)``.  Block boundaries never depend on the thread count
and results are concatenated in block order, so output is identical for any
number of workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .pyp import RngStream

BLOCK_SIZE = 1 << 16


def run_blocks(
    rng: RngStream,
    replicates: int,
    draw: Callable[[np.random.Generator, int], np.ndarray],
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Concatenate ``draw(generator, size)`` over deterministic blocks."""
    replicates = int(replicates)
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if not isinstance(rng, RngStream):
        raise TypeError("Monte Carlo paths need an RngStream so blocks can be derived")
    sizes = [block_size] * (replicates // block_size)
    if replicates % block_size:
        sizes.append(replicates % block_size)

    def one(i):
        return np.asarray(draw(rng.derive(i).generator, sizes[i]))

    if threads <= 1 or len(sizes) == 1:
        parts = [one(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as ex:
            parts = list(ex.map(one, range(len(sizes))))
    return np.concatenate(parts)
