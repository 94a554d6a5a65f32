"""Portable pseudo-random numbers.

All randomness in the package comes from SplitMix64 (Steele, Lea & Flood,
2014), a 64-bit generator from the xorshift-multiply family.  The state is a
single 64-bit counter advanced by the golden-ratio increment
``0x9E3779B97F4A7C15``; each output is the counter passed through the mixer

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

with all arithmetic modulo 2**64.  Because output ``i`` depends only on
``seed + (i + 1) * increment``, blocks of draws are computed with vectorised
``uint64`` arithmetic and the stream is identical on every platform.

Derived quantities:

* uniform doubles in [0, 1): ``(z >> 11) * 2**-53``
* standard normals: Box-Muller on consecutive uniform pairs (cosine branch)
* permutations: stable argsort of uniform keys
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """The SplitMix64 output function on a Python int."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Hash a tuple of integers into a 64-bit seed.

    Used wherever one configured seed fans out into independent streams
    (per class, per repetition, per fold).
    """
    h = 0x6A09E667F3BCC908
    for p in parts:
        h = mix64(h ^ mix64((int(p) + _GAMMA) & _MASK))
    return h


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self, n: int) -> np.ndarray:
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + steps * np.uint64(_GAMMA)
        self.state = (self.state + n * _GAMMA) & _MASK
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        return z ^ (z >> np.uint64(31))

    def random(self, n: int) -> np.ndarray:
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, low: float, high: float, n: int | None = None):
        u = self.random(1 if n is None else n)
        out = low + (high - low) * u
        return float(out[0]) if n is None else out

    def integers(self, low: int, high: int, n: int | None = None):
        """Integers in [low, high] inclusive."""
        u = self.random(1 if n is None else n)
        out = low + np.minimum(np.floor(u * (high - low + 1)), high - low).astype(np.int64)
        return int(out[0]) if n is None else out

    def normal(self, n: int) -> np.ndarray:
        m = (n + 1) // 2
        u = self.random(2 * m)
        u1 = 1.0 - u[:m]  # (0, 1], keeps log finite
        u2 = u[m:]
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
        return z[:n]

    def exponential(self, scale: float) -> float:
        return float(-scale * np.log(1.0 - self.random(1)[0]))

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.random(n), kind="stable")
