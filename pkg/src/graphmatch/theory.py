"""
Closed-form quantities: information measures, recovery thresholds, orbit
moment generating functions and an exact trinomial tail.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import rel_entr, xlogy

from .errors import DomainError, PreconditionError, UnsupportedModelError
from .models import (CorrelationModel, Gaussian, GeneralER, SubsampledER,
                     joint_pmf, model_to_dict)

TIE_WIDTH = 1e-9
DISC_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# information measures

def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    return float(-xlogy(x, x) - xlogy(1 - x, 1 - x))


def binary_kl(s: float, q: float) -> float:
    """KL divergence between Bern(s) and Bern(q); ``inf`` when unbounded."""
    if not (0.0 <= s <= 1.0 and 0.0 <= q <= 1.0):
        raise DomainError(f"binary KL needs s, q in [0, 1], got {s}, {q}")
    return float(rel_entr(s, q) + rel_entr(1 - s, 1 - q))


def discrete_mutual_information(joint) -> float:
    """Mutual information of a finite joint pmf given as a 2-D array."""
    p = np.asarray(joint, dtype=np.float64)
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    return float(np.sum(rel_entr(p, px * py)))


def edge_pair_mi(model: CorrelationModel) -> float:
    """Mutual information between ``A^pi[e]`` and ``B[e]``."""
    if isinstance(model, Gaussian):
        r2 = model.rho ** 2
        return math.inf if r2 >= 1.0 else -0.5 * math.log1p(-r2)
    if isinstance(model, SubsampledER):
        q = model.q
        if q >= 1.0:
            return 0.0
        return q * binary_kl(model.s, q) + (1 - q) * binary_kl(model.eta, q)
    return discrete_mutual_information(joint_pmf(model))


def mi_taylor_er(p: float, s: float) -> float:
    """Small-s approximation ``s^2 p (p - 1 + log(1/p))`` of the ER edge MI."""
    return s * s * p * (p - 1 - math.log(p))


# ---------------------------------------------------------------------------
# thresholds

@dataclass
class ThresholdCheck:
    name: str
    statistic: float
    threshold: float
    ratio: float
    side: str  # "above", "below" or "tie"


@dataclass
class ThresholdReport:
    model: dict
    n: int
    regime: str
    eps: float
    classification: str
    checks: list[ThresholdCheck] = field(default_factory=list)

    def check(self, name: str) -> ThresholdCheck:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return asdict(self)


def _compare(name, stat, thr) -> ThresholdCheck:
    if abs(stat - thr) <= TIE_WIDTH * max(1.0, abs(thr)):
        side = "tie"
    else:
        side = "above" if stat > thr else "below"
    ratio = stat / thr if thr > 0 else math.inf
    return ThresholdCheck(name, stat, thr, ratio, side)


def _clear(c: ThresholdCheck, eps: float, above: bool) -> bool:
    if c.side == "tie":
        return False
    return c.ratio >= 1 + eps if above else c.ratio <= 1 - eps


def exact_recovery_statistic(model) -> float:
    """``(sqrt(p00 p11) - sqrt(p01 p10))^2`` for a binary model."""
    t = joint_pmf(model)
    return (math.sqrt(t[0, 0] * t[1, 1]) - math.sqrt(t[0, 1] * t[1, 0])) ** 2


def gaussian_critical_rho2(n: int) -> float:
    return 4 * math.log(n) / n


def er_regime(p: float, n: int, sparse_exponent: float = 0.25) -> str:
    """``"sparse"`` when ``p <= n^-sparse_exponent``, else ``"dense"``."""
    return "sparse" if math.log(1 / p) >= sparse_exponent * math.log(n) else "dense"


def threshold_report(model: CorrelationModel, n: int, eps: float = 0.0,
                     regime: str = "auto") -> ThresholdReport:
    """Place ``model`` at size ``n`` relative to the recovery thresholds.

    Each check carries the raw statistic, the threshold and their ratio; the
    label only commits to a regime when the ratio clears ``1 +/- eps``.
    """
    if n < 2:
        raise DomainError("threshold report needs n >= 2")
    logn = math.log(n)
    checks = []
    if isinstance(model, Gaussian):
        c = _compare("gaussian_exact", n * model.rho ** 2, 4 * logn)
        checks.append(c)
        label = ("exact-recoverable" if _clear(c, eps, True)
                 else "partial-impossible" if _clear(c, eps, False)
                 else "indeterminate-band")
        return ThresholdReport(model_to_dict(model), n, "gaussian", eps, label, checks)

    exact = _compare("er_exact", n * exact_recovery_statistic(model), logn)
    checks.append(exact)
    if not isinstance(model, SubsampledER):
        label = "exact-recoverable" if _clear(exact, eps, True) else "indeterminate-band"
        return ThresholdReport(model_to_dict(model), n, "general", eps, label, checks)

    p, s = model.p, model.s
    if regime == "auto":
        regime = er_regime(p, n)
    if regime == "dense":
        almost = _compare("er_dense_almost_exact",
                          n * p * s * s * (math.log(1 / p) - 1 + p), 2 * logn)
        checks.append(almost)
        if _clear(exact, eps, True):
            label = "exact-recoverable"
        elif _clear(almost, eps, True):
            label = "almost-exact-only" if _clear(exact, eps, False) else "indeterminate-band"
        elif _clear(almost, eps, False):
            label = "partial-impossible"
        else:
            label = "indeterminate-band"
    elif regime == "sparse":
        stat = n * p * s * s
        pos = _compare("er_sparse_partial", stat, 2 * max(logn / math.log(1 / p), 2.0))
        neg = _compare("er_sparse_impossible", stat, 1.0)
        checks += [pos, neg]
        if _clear(exact, eps, True):
            label = "exact-recoverable"
        elif _clear(pos, eps, True):
            label = "partial-only-band"
        elif _clear(neg, eps, False):
            label = "partial-impossible"
        else:
            label = "indeterminate-band"
    else:
        raise DomainError(f"unknown regime {regime!r}")
    return ThresholdReport(model_to_dict(model), n, regime, eps, label, checks)


def phi(x: float) -> float:
    if not 0.0 < x < 1.0:
        raise DomainError(f"phi needs x in (0, 1), got {x}")
    L = -math.log(x)
    return (L - 1 + x) / (x * L * (1 + L))


# ---------------------------------------------------------------------------
# orbit moment generating functions

@dataclass(frozen=True)
class MgfQuery:
    model: CorrelationModel
    t: float
    k: int
    kind: str = "M"  # "M" (centered product) or "L" (objective difference)

    def evaluate(self) -> float:
        if self.kind == "M":
            return orbit_mgf_m(self.model, self.t, self.k)
        if self.kind == "L":
            return orbit_mgf_l(self.model, self.t, self.k)
        raise ValueError(f"unknown MGF kind {self.kind!r}")


def gaussian_m_tilt_limit(rho: float) -> float:
    return 1.0 / (1.0 + abs(rho))


def gaussian_l_tilt_limit(rho: float) -> float:
    return math.inf if rho >= 1.0 else 1.0 / (2.0 * (1.0 - rho))


def _eigen_pair(T: float, D: float) -> tuple[float, float]:
    disc = T * T - 4 * D
    if disc < 0:
        if disc < -DISC_CLAMP:
            raise DomainError(f"negative discriminant {disc:.3e} in transfer matrix")
        disc = 0.0
    r = math.sqrt(disc)
    return (T - r) / 2, (T + r) / 2


def er_m_trace_det(p: float, s: float, t: float) -> tuple[float, float]:
    q = p * s
    T = (math.exp(t * (1 - q) ** 2) * q * s
         + 2 * math.exp(-t * q * (1 - q)) * q * (1 - s)
         + math.exp(t * q * q) * (1 - 2 * q + q * s))
    D = (math.exp(t * (1 - q) ** 2 + t * q * q) - math.exp(-2 * t * q * (1 - q))) * q * (s - q)
    return T, D


def orbit_mgf_m(model: CorrelationModel, t: float, k: int) -> float:
    """MGF of the centered products summed along a k-edge orbit."""
    if k < 1:
        raise DomainError("orbit length must be >= 1")
    if t < 0:
        raise DomainError("tilt must be >= 0")
    if isinstance(model, SubsampledER):
        lo, hi = _eigen_pair(*er_m_trace_det(model.p, model.s, t))
        return lo ** k + hi ** k
    if isinstance(model, Gaussian):
        rho = model.rho
        if t > gaussian_m_tilt_limit(rho):
            raise DomainError(f"Gaussian M_k needs t <= 1/(1+|rho|) = {gaussian_m_tilt_limit(rho)}")
        l1 = math.sqrt(max(0.0, (1 + rho * t) ** 2 - t * t))
        l2 = math.sqrt(max(0.0, (1 - rho * t) ** 2 - t * t))
        det = ((l1 + l2) / 2) ** k - ((l1 - l2) / 2) ** k
        return math.inf if det <= 0 else 1.0 / det
    raise UnsupportedModelError(f"M_k is defined for gaussian and subsampled_er, not {model.variant}")


def er_l_det(model, t: float) -> float:
    c = joint_pmf(model)
    return -(c[0, 1] * c[1, 0] * math.expm1(t) + c[0, 0] * c[1, 1] * math.expm1(-t))


def orbit_mgf_l(model: CorrelationModel, t: float, k: int) -> float:
    """MGF of the objective difference along a k-edge orbit.

    For the Gaussian model the cyclic determinant is
    ``alpha^k - (-beta)^k``; for even ``k`` this is ``alpha^k - beta^k``.
    """
    if k < 1:
        raise DomainError("orbit length must be >= 1")
    if t < 0:
        raise DomainError("tilt must be >= 0")
    if isinstance(model, Gaussian):
        rho = model.rho
        if t > gaussian_l_tilt_limit(rho):
            raise DomainError(f"Gaussian L_k needs t <= 1/(2(1-rho)) = {gaussian_l_tilt_limit(rho)}")
        l2 = math.sqrt(max(0.0, 1 + 4 * t * rho - 4 * t * t * (1 - rho * rho)))
        alpha, beta = (1 + l2) / 2, (1 - l2) / 2
        det = alpha ** k - (-beta) ** k
        return math.inf if det <= 0 else 1.0 / det
    lo, hi = _eigen_pair(1.0, er_l_det(model, t))
    return lo ** k + hi ** k


@dataclass
class PowerBoundReport:
    k_max: int
    m_violation: float | None  # max relative excess of M_k over M_2^(k/2)
    l_violation: float | None

    def ok(self, tol: float = 1e-12) -> bool:
        return all(v is None or v <= tol for v in (self.m_violation, self.l_violation))


def _power_violation(f, k_max):
    m2 = f(2)
    worst = -math.inf
    for k in range(2, k_max + 1):
        ref = m2 ** (k / 2)
        worst = max(worst, (f(k) - ref) / ref)
    return worst


def mgf_power_bounds(model: CorrelationModel, t: float, k_max: int) -> PowerBoundReport:
    """Largest relative violation of ``X_k <= X_2^(k/2)`` for k in 2..k_max.

    A kind is skipped (``None``) when ``t`` is outside its validity range or
    the model does not define it.
    """
    def attempt(fn):
        try:
            fn(model, t, 2)
        except (DomainError, UnsupportedModelError):
            return None
        return _power_violation(lambda k: fn(model, t, k), k_max)

    return PowerBoundReport(k_max, attempt(orbit_mgf_m), attempt(orbit_mgf_l))


@dataclass
class M2Bounds:
    p: float
    s: float
    t: float
    exact_m2: float
    m1_sq_over_m2: float
    bound_small_q: float | None
    bound_small_t: float | None

    def margins(self) -> dict:
        return {name: None if b is None else b - self.exact_m2
                for name, b in (("small_q", self.bound_small_q), ("small_t", self.bound_small_t))}


SMALL_T = 2.0 ** -10


def m2_upper_bounds(p: float, s: float, t: float) -> M2Bounds:
    """Exact ``M_2`` of the subsampling model with its two closed-form upper bounds.

    A bound is ``None`` when ``t`` is outside its branch.
    """
    q = p * s
    if q > 0.5:
        raise PreconditionError(f"p*s = {q} > 1/2; apply flip_model first")
    model = SubsampledER(p, s)
    m1 = orbit_mgf_m(model, t, 1)
    m2 = orbit_mgf_m(model, t, 2)
    small_q = None
    if t <= math.log(1 / p):
        small_q = (1 + q * q * s * s - 2 * q * q + 10 * q ** 3 * t * (1 + t)
                   + 2 * math.exp(t) * q * q * (1 - s * s) + math.exp(2 * t) * q * q * s * s)
    small_t = None
    if t <= SMALL_T:
        rho = (s - q) / (1 - q)
        var = q * (1 - q)
        small_t = 1 + t * t * var * var * (1 + rho * rho) + 8 * t ** 3 * q * s
    return M2Bounds(p, s, t, m2, m1 * m1 / m2, small_q, small_t)


# ---------------------------------------------------------------------------
# trinomial walk

def trinomial_pmf(a: float, b: float, n: int) -> np.ndarray:
    """Law of a sum of ``n`` i.i.d. steps in {+1 w.p. a, -1 w.p. b, 0}.

    Entry ``k + n`` holds ``P(sum == k)`` for ``k`` in ``-n..n``.
    """
    if a < 0 or b < 0 or a + b > 1 + 1e-15 or n < 0:
        raise DomainError(f"invalid step law a={a}, b={b} or n={n}")
    c = max(0.0, 1.0 - a - b)
    v = np.zeros(2 * n + 1)
    v[n] = 1.0
    for step in range(n):
        lo, hi = n - step - 1, n + step + 2
        cur = v[lo:hi].copy()
        new = c * cur
        new[1:] += a * cur[:-1]
        new[:-1] += b * cur[1:]
        v[lo:hi] = new
    return v


def trinomial_tail(a: float, b: float, n: int, tau: float) -> float:
    """``P(X_1 + ... + X_n <= -tau)`` by exact dynamic programming."""
    if n < 1:
        raise DomainError("n must be >= 1")
    v = trinomial_pmf(a, b, n)
    cut = math.floor(-tau)  # largest integer k with k <= -tau
    if cut < -n:
        return 0.0
    if cut >= n:
        return 1.0
    return min(1.0, math.fsum(v[: cut + n + 1]))


def inverse_chernoff_bound(a: float, b: float, n: int, delta: float) -> float:
    """``exp(-n (sqrt a - sqrt b)^2 - (delta/2) log n)``."""
    return math.exp(-n * (math.sqrt(a) - math.sqrt(b)) ** 2 - 0.5 * delta * math.log(n))


def inverse_chernoff_surrogates(a: float, b: float, n: int, tau: float) -> bool:
    """Finite-n stand-ins for the lemma's hypotheses.

    ``a >= b > 0``, ``n (sqrt a - sqrt b)^2 <= 2 log n``, ``a n >= 50``,
    ``tau <= 0.1 sqrt(a n log n)`` and ``tau <= 0.1 a n``.
    """
    if b <= 0 or a < b:
        return False
    g = (math.sqrt(a) - math.sqrt(b)) ** 2
    an = a * n
    return (n * g <= 2 * math.log(n) and an >= 50
            and tau <= 0.1 * math.sqrt(an * math.log(n)) and tau <= 0.1 * an)
