"""Counter-based splitmix64 streams.

Every random draw in the package goes through :class:`Stream`, so an
instance or a sweep is a pure function of its integer seed. Output ``i`` of a
stream seeded with ``s`` is ``mix64(s + (i + 1) * GOLDEN)``, which makes the
generator trivially splittable and independent of the numpy version.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """The splitmix64 finalizer on a Python integer (taken mod 2**64).

    >>> hex(splitmix64(0))
    '0x0'
    >>> splitmix64(1) == splitmix64(1 + 2**64)
    True
    """
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _C1) & MASK64
    z = ((z ^ (z >> 27)) * _C2) & MASK64
    return z ^ (z >> 31)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_C1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_C2)
    return z ^ (z >> np.uint64(31))


class Stream:
    """A position in the splitmix64 sequence for one seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def spawn(self, key: int) -> "Stream":
        """Independent child stream; does not advance ``self``."""
        return Stream(splitmix64(self.seed ^ splitmix64(key)))

    def u64(self, k: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + k + 1, dtype=np.uint64)
        self.counter += k
        return _mix(idx * np.uint64(GOLDEN) + np.uint64(self.seed))

    def uniform(self, k: int) -> np.ndarray:
        """``k`` doubles in [0, 1) built from the top 53 bits."""
        return (self.u64(k) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, k: int) -> np.ndarray:
        """``k`` standard normals by Box-Muller on consecutive uniform pairs."""
        m = (k + 1) // 2
        u = self.uniform(2 * m)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))  # 1 - u lies in (0, 1]
        theta = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:k]

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of ``range(n)`` as a one-line image array."""
        return np.argsort(self.uniform(n), kind="stable")
