"""Deterministic random streams for parallel Monte Carlo work.

Every unit of work (simulation replication, permutation draw, group sample)
gets its own generator keyed by ``(seed, *path)``.  Streams built from the
same key are bit-identical no matter which worker draws them or in which
order, so results can be aggregated by index without any shared RNG state.
The underlying bit generator is Philox, a counter-based generator, which
makes key-derived streams cheap and statistically independent.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "indexed_stream", "derive_seed"]


def _key(seed: int, path: tuple[int, ...]) -> np.ndarray:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(p) & 0xFFFFFFFFFFFFFFFF for p in path]
    return np.random.SeedSequence(entropy).generate_state(2, np.uint64)


def stream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for work unit ``path`` under master ``seed``."""
    return np.random.Generator(np.random.Philox(key=_key(seed, path)))


def indexed_stream(seed: int, index: int) -> np.random.Generator:
    """Generator for work unit ``index``, keyed directly (no hashing).

    Cheaper than :func:`stream` for hot loops; Philox guarantees
    independence for distinct keys, sequential ones included.
    """
    key = np.array(
        [int(seed) & 0xFFFFFFFFFFFFFFFF, int(index) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *path: int) -> int:
    """Derive a 63-bit sub-seed usable as the master seed of a nested layer."""
    state = np.random.SeedSequence(
        [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(p) & 0xFFFFFFFFFFFFFFFF for p in path]
    ).generate_state(1, np.uint64)
    return int(state[0] >> 1)
