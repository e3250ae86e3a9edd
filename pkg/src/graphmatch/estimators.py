"""
Maximum-likelihood matching.

The likelihood of a candidate permutation is monotone in the quadratic
assignment objective ``<A^pi, B>``: increasing for positively correlated
models, decreasing for negatively correlated ones.  :func:`solve_exact`
enumerates S_n; :func:`solve_local` runs steepest ascent over transpositions.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DimensionError
from .models import MatchInstance, correlation_sign
from .perm import Permutation, edge_count, edge_pairs, overlap, slot_table
from .rng import Stream

EXACT_CAP = 10
TIE_REL = 1e-9
_CHUNK = 200_000


@dataclass
class MatchResult:
    pi_hat: Permutation
    objective: float
    method: str
    evaluations: int
    optimizer_count: int | None = None
    sign: str = "positive"
    optimizers: list[Permutation] = field(default_factory=list, repr=False)

    def to_dict(self, instance: MatchInstance | None = None) -> dict:
        out = {
            "pi_hat": list(self.pi_hat.image),
            "objective": self.objective,
            "method": self.method,
            "evaluations": self.evaluations,
            "sign": self.sign,
        }
        if self.optimizer_count is not None:
            out["optimizer_count"] = self.optimizer_count
        if instance is not None and instance.pi_true is not None:
            out["overlap_vs_truth"] = overlap(instance.pi_true, self.pi_hat)
        return out


def _image(pi) -> np.ndarray:
    return np.asarray(getattr(pi, "image", pi), dtype=np.int64)


def objective(instance: MatchInstance, pi) -> float:
    """``<A^pi, B>``: sum over slots {i,j} of ``A[{pi(i), pi(j)}] * B[{i,j}]``."""
    p = _image(pi)
    if len(p) != instance.n:
        raise DimensionError(f"permutation on {len(p)} vertices, instance has {instance.n}")
    if instance.n < 2:
        return 0.0
    i, j = edge_pairs(instance.n)
    return float(instance.A[slot_table(instance.n)[p[i], p[j]]] @ instance.B)


@functools.lru_cache(maxsize=4)
def _perm_array(n: int) -> np.ndarray:
    a = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    a.setflags(write=False)
    return a


def permutation_blocks(n: int, chunk: int = _CHUNK):
    """All of S_n in lexicographic order, as ``(k, n)`` int arrays."""
    if n <= 8:
        yield _perm_array(n)
        return
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def edge_images(perms: np.ndarray) -> np.ndarray:
    """Row ``r`` is the slot map of the edge permutation induced by ``perms[r]``."""
    n = perms.shape[1]
    i, j = edge_pairs(n)
    return slot_table(n)[perms[:, i], perms[:, j]]


def _resolve_sign(instance, sign):
    if sign is not None:
        return sign
    return "positive" if instance.model is None else correlation_sign(instance.model)


def solve_exact(instance: MatchInstance, sign: str | None = None, cap: int = EXACT_CAP) -> MatchResult:
    """Exhaustive MLE; ties go to the lexicographically smallest permutation.

    ``sign`` defaults to the correlation sign of the instance's model.  With
    sign ``"zero"`` the objective is maximised but every permutation is
    equally likely, which the result records.
    """
    n = instance.n
    if n > cap:
        raise CapacityError(f"n = {n} exceeds the exhaustive cap {cap}; use solve_local")
    sign = _resolve_sign(instance, sign)
    mult = -1.0 if sign == "negative" else 1.0
    if n < 2:
        return MatchResult(Permutation.identity(n), 0.0, "exhaustive", 1, 1, sign, [Permutation.identity(n)])

    kept, kept_vals = [], []
    evals = 0
    A, B = instance.A, instance.B
    for block in permutation_blocks(n):
        vals = mult * (A[edge_images(block)] @ B)
        evals += len(block)
        top = vals.max()
        keep = vals >= top - TIE_REL * max(1.0, abs(top))
        kept.append(block[keep])
        kept_vals.append(vals[keep])
    vals = np.concatenate(kept_vals)
    best = vals.max()
    opt = np.concatenate(kept)[vals >= best - TIE_REL * max(1.0, abs(best))]
    optimizers = [Permutation(tuple(r)) for r in opt.tolist()]
    return MatchResult(optimizers[0], mult * best, "exhaustive", evals, len(optimizers), sign, optimizers)


def swap_delta(instance: MatchInstance, pi, i: int, j: int) -> float:
    """``<A^{pi o (i j)}, B> - <A^pi, B>`` in O(n)."""
    p = _image(pi)
    C = instance.amat
    B = instance.bmat
    rows_i = C[p[i], p]
    rows_j = C[p[j], p]
    mask = np.ones(instance.n, dtype=bool)
    mask[[i, j]] = False
    return -float(np.dot((rows_i - rows_j)[mask], (B[i] - B[j])[mask]))


def swap_delta_matrix(C: np.ndarray, B: np.ndarray) -> np.ndarray:
    """All transposition deltas at once; ``C`` is the relabeled matrix ``A^pi``.

    Entry (i, j) equals ``-sum_{k != i, j} (C_ik - C_jk)(B_ik - B_jk)``.
    """
    r = np.einsum("ik,ik->i", C, B)
    M = C @ B.T
    full = r[:, None] + r[None, :] - M - M.T - 2 * C * B
    return -full


def transposition_scan(instance: MatchInstance, pi=None) -> list[tuple[int, int, float]]:
    """Objective loss ``<A^pi, B> - <A^{pi o (i j)}, B>`` for every pair i < j.

    ``pi`` defaults to the true permutation.  A negative entry is a
    transposition that beats ``pi``.
    """
    n = instance.n
    if n < 3:
        raise DimensionError("the transposition scan needs n >= 3")
    if pi is None:
        if instance.pi_true is None:
            raise ValueError("instance carries no ground truth; pass pi explicitly")
        pi = instance.pi_true
    p = _image(pi)
    C = instance.amat[np.ix_(p, p)]
    D = -swap_delta_matrix(C, instance.bmat)
    i, j = edge_pairs(n)
    return [(int(a), int(b), float(v)) for a, b, v in zip(i, j, D[i, j])]


def _climb(instance, start: np.ndarray, mult: float) -> tuple[np.ndarray, float, int]:
    p = start.copy()
    A, Bm = instance.amat, mult * instance.bmat
    n = instance.n
    iu, ju = edge_pairs(n)
    scans = 0
    while True:
        C = A[np.ix_(p, p)]
        gains = swap_delta_matrix(C, Bm)[iu, ju]
        scans += 1
        k = int(np.argmax(gains))
        if gains[k] <= TIE_REL * max(1.0, float(np.abs(Bm).max())):
            break
        a, b = iu[k], ju[k]
        p[a], p[b] = p[b], p[a]
    return p, mult * objective(instance, p), scans * len(iu) + 1  # score to maximise


def solve_local(instance: MatchInstance, restarts: int = 32, seed: int = 0,
                use_truth: bool = True, sign: str | None = None) -> MatchResult:
    """Steepest-ascent hill climbing over the transposition neighbourhood.

    Restart ``r`` starts from a uniform permutation drawn from
    ``Stream(seed).spawn(r)``.  When ``use_truth`` is set and the instance has
    ground truth, one extra climb starts at the truth, so the returned
    objective is never worse than the truth's.  Ties across restarts go to the
    lowest restart index (the truth climb counts as index -1).
    """
    n = instance.n
    if n < 2:
        raise DimensionError("local search needs n >= 2")
    sign = _resolve_sign(instance, sign)
    mult = -1.0 if sign == "negative" else 1.0
    root = Stream(seed)
    starts = []
    if use_truth and instance.pi_true is not None:
        starts.append(instance.pi_true.array.copy())
    starts += [root.spawn(r).permutation(n) for r in range(restarts)]

    best_p, best_score, evals = None, -math.inf, 0
    for start in starts:
        p, score, ev = _climb(instance, start, mult)
        evals += ev
        if best_p is None or score > best_score + TIE_REL * max(1.0, abs(best_score)):
            best_p, best_score = p, score
    return MatchResult(Permutation(tuple(best_p.tolist())), mult * best_score, "local-search", evals, None, sign)
