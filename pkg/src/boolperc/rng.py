"""Seeded random streams.

Two flavours are used throughout the package:

* :func:`replicate_generator` returns a Philox-backed ``numpy`` generator for
  one replicate.  Values are consumed sequentially, e.g. one row of uniforms
  per vertex in index order.
* :class:`KeyedStream` maps integer keys (vertex, level, mark, ...) to
  uniforms through a counter-style hash, so a value depends only on its key
  and never on the order in which it is requested.  Lazy, memoized draws in
  the point-process realizations rely on this.
"""

from __future__ import annotations

import secrets

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def fresh_seed() -> int:
    """Draw a 64-bit master seed from system entropy."""
    return secrets.randbits(64)


def replicate_generator(seed: int, replicate: int, tag: int = 0) -> np.random.Generator:
    """Independent Philox stream for ``(seed, replicate, tag)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK, spawn_key=(int(tag), int(replicate)))
    return np.random.Generator(np.random.Philox(ss))


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class KeyedStream:
    """Order-independent uniforms indexed by integer keys.

    ``stream.uniform(tag, a, b)`` broadcasts ``a`` and ``b`` and returns one
    uniform in the open interval (0, 1) per key tuple.
    """

    def __init__(self, seed: int, replicate: int = 0):
        self.seed = int(seed) & _MASK
        self.replicate = int(replicate)
        with np.errstate(over="ignore"):
            base = _mix(np.uint64(self.seed) + _GOLDEN)
            self._base = _mix(base ^ (np.uint64(self.replicate & _MASK) * _GOLDEN))

    def _hash(self, tag: int, *keys) -> np.ndarray:
        with np.errstate(over="ignore"):
            h = _mix(self._base ^ (np.uint64(tag & _MASK) * _GOLDEN + _M1))
            for k in keys:
                k = np.asarray(k).astype(np.int64).view(np.uint64)
                h = _mix(h ^ (k * _GOLDEN + _M2))
        return np.asarray(h, dtype=np.uint64)

    def uniform(self, tag: int, *keys) -> np.ndarray:
        h = self._hash(tag, *keys)
        return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def poisson_from_uniform(u, mu) -> np.ndarray:
    """Inverse-CDF Poisson draw; ``u`` in (0, 1), ``mu`` >= 0 (broadcast)."""
    u, mu = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(mu, dtype=float))
    out = np.zeros(u.shape, dtype=np.int64)
    pmf = np.exp(-mu)
    cdf = pmf.copy()
    active = u > cdf
    k = 0
    while active.any():
        k += 1
        if k > 10_000:
            raise FloatingPointError("Poisson inversion did not terminate")
        pmf = np.where(active, pmf * mu / k, pmf)
        cdf = np.where(active, cdf + pmf, cdf)
        out[active] = k
        # guard against cdf stalling below u through rounding
        active = active & (u > cdf) & (pmf > 0)
    return out
