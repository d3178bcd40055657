"""Counter-based random numbers (Philox4x32-10), vectorized over numpy arrays.

Every draw is a pure function of ``(key, counter)``, so a matrix entry can be
generated from ``(seed, i, j)`` alone.  Fill order and block partitioning then
have no influence on the values produced.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_MASK64 = (1 << 64) - 1

# counter word 2 separates independent uses of one key
STREAM_ENTRIES = 0
STREAM_SEEDS = 1


def philox4x32(counter, key, rounds: int = 10):
    """Apply the Philox4x32 bijection.

    ``counter`` is a sequence of four integer arrays (broadcastable), ``key`` a
    pair of 32-bit integers.  Returns four ``uint64`` arrays holding 32-bit words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = (
            hi1 ^ c1 ^ np.uint64(k0),
            lo1,
            hi0 ^ c3 ^ np.uint64(k1),
            lo0,
        )
    return c0, c1, c2, c3


def split_seed(seed: int) -> tuple[int, int]:
    seed = int(seed) & _MASK64
    return seed & 0xFFFFFFFF, seed >> 32


def derive_seed(master: int, *path: int) -> int:
    """64-bit child seed of ``master`` addressed by up to two non-negative integers."""
    if len(path) > 2:
        raise ValueError("seed path has at most two components")
    a, b = (tuple(path) + (0, 0))[:2]
    w = philox4x32((a, b, STREAM_SEEDS, 0), split_seed(master))
    return int(w[0]) | (int(w[1]) << 32)


def words_to_unit(hi, lo):
    """Uniform on the 2^52-point lattice (k + 1/2) / 2^52, strictly inside (0, 1).

    With 53 bits the top lattice point rounds to 1.0, hence 52.
    """
    a = (hi >> np.uint64(6)).astype(np.float64)
    b = (lo >> np.uint64(6)).astype(np.float64)
    return (a * 67108864.0 + b + 0.5) / 4503599627370496.0


def entry_words(seed: int, i, j):
    """Four Philox words for matrix position ``(i, j)`` (0-based) under ``seed``."""
    return philox4x32((i, j, STREAM_ENTRIES, 0), split_seed(seed))
