"""Seeded random streams.

Stream layout: task ``k`` of seed ``s`` draws from Philox-4x64 with the
128-bit key ``s + (k << 64)`` and counter starting at zero. Standard normals
are produced by the inverse CDF applied to the top 53 bits of each raw
64-bit word, ``u = ((w >> 11) + 0.5) * 2**-53``, so no variate is ever
rejected and the sequence depends only on the raw Philox output.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

#: bump when the stream layout or the normal transform changes
VERSION = "philox4x64-ndtri/1"

_MASK64 = (1 << 64) - 1


def bit_generator(seed: int, stream: int = 0) -> np.random.Philox:
    if seed < 0 or stream < 0:
        raise ValueError(f"seed and stream must be nonnegative, got {seed}, {stream}")
    key = (seed & _MASK64) + ((stream & _MASK64) << 64)
    return np.random.Philox(key=key)


def raw_words(seed: int, stream: int, size: int) -> np.ndarray:
    return bit_generator(seed, stream).random_raw(size).astype(np.uint64)


def uniforms(seed: int, stream: int, size: int) -> np.ndarray:
    """Uniforms in the open interval ``(0, 1)``."""
    w = raw_words(seed, stream, size)
    return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, stream: int, size: int) -> np.ndarray:
    return ndtri(uniforms(seed, stream, size))


class Stream:
    """Sequential reader over one ``(seed, stream)`` pair."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = seed
        self.stream = stream
        self._bg = bit_generator(seed, stream)

    def _words(self, size: int) -> np.ndarray:
        return self._bg.random_raw(size).astype(np.uint64)

    def uniform(self, size: int | None = None):
        n = 1 if size is None else size
        u = ((self._words(n) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        return float(u[0]) if size is None else u

    def normal(self, size: int | None = None):
        z = ndtri(self.uniform(1 if size is None else size))
        return float(z[0]) if size is None else z

    def integers(self, lo: int, hi: int, size: int | None = None):
        """Integers in ``[lo, hi)`` via ``floor(lo + u (hi - lo))``."""
        if hi <= lo:
            raise ValueError(f"empty integer range [{lo}, {hi})")
        u = self.uniform(1 if size is None else size)
        k = np.minimum(lo + np.floor(u * (hi - lo)).astype(np.int64), hi - 1)
        return int(k[0]) if size is None else k

    def choice(self, options):
        return options[self.integers(0, len(options))]
