"""
Vertex permutations, the permutation they induce on edge slots, and orbit
counts.

Vertices are ``0..n-1``. The unordered pair ``(i, j)`` with ``i < j`` lives in
slot ``i*(2n-i-1)/2 + (j-i-1)``, i.e. row-major upper-triangular order, which
is the order of ``numpy.triu_indices(n, 1)``.

Composition follows function notation: ``(s * t)(i) == s(t(i))``.
"""
from __future__ import annotations

import functools
from collections import Counter
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError


def edge_count(n: int) -> int:
    return n * (n - 1) // 2


def edge_index(i: int, j: int, n: int) -> int:
    """Slot of the unordered pair {i, j}.

    >>> [edge_index(i, j, 4) for i, j in [(0, 1), (0, 3), (1, 2), (2, 3)]]
    [0, 2, 3, 5]
    """
    if i == j:
        raise ValueError("self-loops have no edge slot")
    if i > j:
        i, j = j, i
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


@functools.lru_cache(maxsize=None)
def edge_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays ``(I, J)`` with ``I[e] < J[e]`` for every slot ``e``."""
    i, j = np.triu_indices(n, 1)
    i.setflags(write=False)
    j.setflags(write=False)
    return i, j


@functools.lru_cache(maxsize=None)
def slot_table(n: int) -> np.ndarray:
    """Symmetric ``n x n`` table of slot indices (diagonal is -1)."""
    t = np.full((n, n), -1, dtype=np.int64)
    i, j = edge_pairs(n)
    e = np.arange(edge_count(n))
    t[i, j] = e
    t[j, i] = e
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{0, ..., n-1}`` in one-line notation."""

    image: tuple[int, ...]

    def __post_init__(self):
        img = tuple(int(x) for x in self.image)
        if sorted(img) != list(range(len(img))):
            raise ValueError(f"not a permutation of range({len(img)}): {img}")
        object.__setattr__(self, "image", img)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        """Build from disjoint cycles; ``(0, 1, 2)`` sends 0 to 1, 1 to 2, 2 to 0.

        >>> Permutation.from_cycles(4, [(0, 1)])
        Permutation(image=(1, 0, 2, 3))
        """
        img = list(range(n))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                img[a] = b
        return cls(tuple(img))

    @classmethod
    def parse(cls, text: str) -> "Permutation":
        """Read whitespace-separated one-line notation, e.g. ``"1 0 2 3"``."""
        return cls(tuple(int(tok) for tok in text.split()))

    def __str__(self):
        return " ".join(map(str, self.image))

    def __len__(self):
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        _check_same_n(self, other)
        return Permutation(tuple(self.image[x] for x in other.image))

    @property
    def n(self) -> int:
        return len(self.image)

    @property
    def array(self) -> np.ndarray:
        a = np.array(self.image, dtype=np.int64)
        a.setflags(write=False)
        return a

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, x in enumerate(self.image):
            inv[x] = i
        return Permutation(tuple(inv))

    def fixed_points(self) -> list[int]:
        return [i for i, x in enumerate(self.image) if i == x]

    def cycles(self) -> list[tuple[int, ...]]:
        return cycles_of(self.image)


def cycles_of(image: Sequence[int]) -> list[tuple[int, ...]]:
    """Canonical cycles: each starts at its minimum, sorted by that minimum.

    >>> cycles_of([1, 2, 0, 4, 3, 5])
    [(0, 1, 2), (3, 4), (5,)]
    """
    seen = [False] * len(image)
    out = []
    for start in range(len(image)):
        if seen[start]:
            continue
        cyc = []
        x = start
        while not seen[x]:
            seen[x] = True
            cyc.append(x)
            x = image[x]
        out.append(tuple(cyc))
    return out


def _check_same_n(a: Permutation, b: Permutation):
    if a.n != b.n:
        raise DimensionError(f"permutations act on {a.n} and {b.n} vertices")


def edge_image(perm: Sequence[int] | np.ndarray) -> np.ndarray:
    """Slot map of the induced edge permutation as an int array."""
    p = np.asarray(perm, dtype=np.int64)
    n = len(p)
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    i, j = edge_pairs(n)
    return slot_table(n)[p[i], p[j]]


def induced_edge_permutation(sigma: Permutation) -> Permutation:
    """The permutation of the ``C(n, 2)`` slots sending {i, j} to {sigma(i), sigma(j)}.

    >>> induced_edge_permutation(Permutation.from_cycles(3, [(0, 1)]))
    Permutation(image=(0, 2, 1))
    """
    return Permutation(tuple(edge_image(sigma.image).tolist()))


@dataclass(frozen=True)
class OrbitDecomposition:
    node_orbits: list[tuple[int, ...]]
    edge_orbits: list[tuple[int, ...]]
    node_counts: dict[int, int] = field(default_factory=dict)
    edge_counts: dict[int, int] = field(default_factory=dict)

    def n_k(self, k: int) -> int:
        return self.node_counts.get(k, 0)

    def N_k(self, k: int) -> int:
        return self.edge_counts.get(k, 0)

    def edge_orbit_pairs(self, n: int) -> list[tuple[tuple[int, int], ...]]:
        i, j = edge_pairs(n)
        return [tuple((int(i[e]), int(j[e])) for e in orb) for orb in self.edge_orbits]


def orbit_decomposition(sigma: Permutation) -> OrbitDecomposition:
    node = sigma.cycles()
    edge = cycles_of(edge_image(sigma.image).tolist())
    return OrbitDecomposition(
        node_orbits=node,
        edge_orbits=edge,
        node_counts=dict(sorted(Counter(map(len, node)).items())),
        edge_counts=dict(sorted(Counter(map(len, edge)).items())),
    )


def relative(pi: Permutation, pi_hat: Permutation) -> Permutation:
    """``pi^{-1} o pi_hat``, whose fixed points are where the two agree."""
    _check_same_n(pi, pi_hat)
    return pi.inverse() * pi_hat


def overlap(pi: Permutation, pi_hat: Permutation) -> float:
    """Fraction of vertices on which the two permutations agree."""
    _check_same_n(pi, pi_hat)
    if pi.n == 0:
        return 1.0
    return sum(a == b for a, b in zip(pi.image, pi_hat.image)) / pi.n


def nonfixed_distance(pi: Permutation, pi_prime: Permutation) -> int:
    _check_same_n(pi, pi_prime)
    return sum(a != b for a, b in zip(pi.image, pi_prime.image))


def edge_fixed_fraction(pi: Permutation, pi_hat: Permutation) -> float:
    """Share of edge slots fixed by the edge permutation of ``pi^{-1} o pi_hat``."""
    sigma = relative(pi, pi_hat)
    m = edge_count(sigma.n)
    if m == 0:
        return 1.0
    return int(np.sum(edge_image(sigma.image) == np.arange(m))) / m


def fixed_edge_count_formula(n1: int, n2: int) -> int:
    """Fixed edges predicted from node orbit counts: ``C(n1, 2) + n2``."""
    return comb(n1, 2) + n2
