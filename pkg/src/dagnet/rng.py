"""Random number plumbing.

Every sampler takes an explicit ``numpy.random.Generator``.  Generators are
always built on PCG64 (numpy's ``default_rng``), so a seed reproduces the same
stream on every platform that ships the same numpy bit generator version.
"""
from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.PCG64"


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is not None and not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for ``(seed, *keys)``; used for per-task determinism."""
    ss = np.random.SeedSequence([int(seed) % 2**64, *[int(k) % 2**64 for k in keys]])
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63))


def randbelow(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in ``[0, n)`` for arbitrarily large ``n``."""
    if n <= 0:
        raise ValueError("n must be positive")
    if n <= 2**62:
        return int(rng.integers(0, n))
    nbits = n.bit_length()
    nbytes = (nbits + 7) // 8
    excess = nbytes * 8 - nbits
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little") >> excess
        if x < n:
            return x


def randint_inclusive(rng: np.random.Generator, lo: int, hi: int) -> int:
    return lo + randbelow(rng, hi - lo + 1)
