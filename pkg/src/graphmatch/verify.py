"""
Invariant suites behind ``graphmatch verify``.

Each suite returns a list of :class:`Check`; the oracles here are computed
independently of the closed forms they test (exhaustive enumeration,
Gaussian determinants, direct convolution).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .bayes import InterpolatedModel, exact_mutual_information, mmse_of_relabeled_graph
from .models import Gaussian, GeneralER, SubsampledER, joint_pmf
from .perm import Permutation, edge_count, orbit_decomposition, overlap, edge_fixed_fraction
from .rng import Stream
from .theory import (edge_pair_mi, gaussian_l_tilt_limit, gaussian_m_tilt_limit,
                     inverse_chernoff_bound, inverse_chernoff_surrogates, m2_upper_bounds,
                     mgf_power_bounds, orbit_mgf_l, orbit_mgf_m, phi, trinomial_pmf,
                     trinomial_tail)

SUITES = ("mgf", "bounds", "bayes", "orbits", "tails")


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    value: float | None = None
    limit: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# independent oracles

def er_cyclic_mgf_enumeration(model, t: float, k: int, kind: str = "M") -> float:
    """Sum over all 4^k cell assignments of a k-cycle of matched pairs.

    ``M``: ``exp(t * sum (a_{i+1} - q)(b_i - q))`` with ``q = ps``.
    ``L``: ``exp(t * sum (a_{i+1} b_i - a_i b_i))``.
    """
    pmf = joint_pmf(model)
    q = model.q if kind == "M" else 0.0
    cells = np.array(list(itertools.product(range(4), repeat=k)))
    a, b = cells >> 1, cells & 1
    a_next = np.roll(a, -1, axis=1)
    prob = np.prod(pmf.ravel()[cells], axis=1)
    if kind == "M":
        expo = ((a_next - q) * (b - q)).sum(axis=1)
    else:
        expo = (a_next * b - a * b).sum(axis=1)
    return math.fsum(prob * np.exp(t * expo))


def _cyclic_quadratic(k: int, kind: str) -> np.ndarray:
    """Symmetric K with ``x^T K x / 2`` equal to the cyclic statistic of ``x = (a, b)``."""
    X = np.roll(np.eye(k), 1, axis=0)  # X[j, i] = 1 iff j = i + 1 (mod k)
    if kind == "L":
        X = X - np.eye(k)
    K = np.zeros((2 * k, 2 * k))
    K[:k, k:] = X
    K[k:, :k] = X.T
    return K


def gaussian_cyclic_mgf_det(rho: float, t: float, k: int, kind: str = "M") -> float:
    """``E exp(t * statistic)`` for standard pairs with correlation rho, via
    ``det(I - t Sigma K)^{-1/2}``."""
    cov = np.block([[np.eye(k), rho * np.eye(k)], [rho * np.eye(k), np.eye(k)]])
    M = np.eye(2 * k) - t * cov @ _cyclic_quadratic(k, kind)
    return float(np.linalg.det(M) ** -0.5)


def gaussian_cyclic_mgf_mc(rho: float, t: float, k: int, samples: int, seed: int = 0,
                           kind: str = "M", chunk: int = 1_000_000) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of the cyclic MGF."""
    rng = np.random.default_rng(seed)
    total, total_sq, done = 0.0, 0.0, 0
    c = math.sqrt(1 - rho * rho)
    while done < samples:
        m = min(chunk, samples - done)
        a = rng.standard_normal((m, k))
        b = rho * a + c * rng.standard_normal((m, k))
        stat = (np.roll(a, -1, axis=1) * b).sum(axis=1)
        if kind == "L":
            stat -= (a * b).sum(axis=1)
        v = np.exp(t * stat)
        total += v.sum()
        total_sq += (v * v).sum()
        done += m
    mean = total / samples
    var = max(0.0, total_sq / samples - mean * mean)
    return mean, math.sqrt(var / samples)


def trinomial_tail_enumeration(a: float, b: float, n: int, tau: float) -> float:
    """Direct sum over all 3^n step sequences."""
    c = 1 - a - b
    total = 0.0
    for steps in itertools.product((1, -1, 0), repeat=n):
        if sum(steps) <= -tau:
            total += math.prod(a if x == 1 else b if x == -1 else c for x in steps)
    return total


# ---------------------------------------------------------------------------
# grids shared with the acceptance tests

ER_MGF_GRID = [(p, s, t) for p in (0.05, 0.3) for s in (0.2, 0.8) for t in (0.1, 0.5)]
GAUSSIAN_MGF_GRID = [(0.3, 0.3), (0.7, 0.25)]  # (rho, t) with a finite second moment


def power_bound_grid():
    out = []
    for p in (0.05, 0.3):
        for s in (0.2, 0.8):
            for t in (0.1, math.log(1 / p)):
                out.append((SubsampledER(p, s), t))
    for rho in (0.2, 0.8):
        top = min(gaussian_m_tilt_limit(rho), gaussian_l_tilt_limit(rho))
        for frac in (0.1, 0.5, 0.9):
            out.append((Gaussian(rho), frac * top))
    return out


def m2_grid():
    out = []
    for p in (0.01, 0.1, 0.4):
        for s in (0.1, 0.5, 0.9, 1.0):
            if p * s <= 0.5:
                out.append((p, s))
    return out


def inverse_chernoff_grid():
    """(a, b, n, tau, p, s) on a pre-declared grid, filtered by the surrogates."""
    out = []
    for p in (0.2, 0.3, 0.4):
        for s in (0.08, 0.10, 0.12):
            c = SubsampledER(p, s).to_general()
            a, b = 2 * c.p00 * c.p11, 2 * c.p01 * c.p10
            for n in (4000, 8000, 16000):
                for tau in (0, math.floor(0.1 * math.sqrt(a * n * math.log(n)))):
                    if inverse_chernoff_surrogates(a, b, n, tau):
                        out.append((a, b, n, tau, p, s))
    return out


BAYES_MI_MODELS = [SubsampledER(0.3, 0.5), SubsampledER(0.5, 0.9), SubsampledER(0.1, 1.0),
                   SubsampledER(0.8, 0.3), GeneralER(0.4, 0.15, 0.15, 0.3),
                   GeneralER(0.1, 0.4, 0.4, 0.1)]


# ---------------------------------------------------------------------------
# suites

def suite_mgf(mc_samples: int = 0) -> list[Check]:
    out = []
    worst = 0.0
    for p, s, t in ER_MGF_GRID:
        m = SubsampledER(p, s)
        for k in range(1, 6):
            for kind, fn in (("M", orbit_mgf_m), ("L", orbit_mgf_l)):
                worst = max(worst, abs(fn(m, t, k) - er_cyclic_mgf_enumeration(m, t, k, kind)))
    out.append(Check("mgf", "er_closed_form_vs_enumeration", worst <= 1e-12, worst, 1e-12))

    worst = 0.0
    for rho in (0.2, 0.6, 0.8):
        for k in range(1, 7):
            for kind, fn, lim in (("M", orbit_mgf_m, gaussian_m_tilt_limit(rho)),
                                  ("L", orbit_mgf_l, gaussian_l_tilt_limit(rho))):
                for t in (0.1 * lim, 0.5 * lim):
                    ref = gaussian_cyclic_mgf_det(rho, t, k, kind)
                    worst = max(worst, abs(fn(Gaussian(rho), t, k) - ref) / ref)
    out.append(Check("mgf", "gaussian_closed_form_vs_determinant", worst <= 1e-10, worst, 1e-10))

    if mc_samples:
        worst = 0.0
        for rho, t in GAUSSIAN_MGF_GRID:
            for k in (1, 2, 3):
                est, _ = gaussian_cyclic_mgf_mc(rho, t, k, mc_samples, seed=k)
                worst = max(worst, abs(orbit_mgf_m(Gaussian(rho), t, k) - est) / est)
        out.append(Check("mgf", "gaussian_closed_form_vs_monte_carlo", worst <= 0.01, worst, 0.01))

    zero = max(abs(fn(m, 0.0, k) - 1.0) for m in (SubsampledER(0.3, 0.5), Gaussian(0.5))
               for fn in (orbit_mgf_m, orbit_mgf_l) for k in range(1, 8))
    out.append(Check("mgf", "zero_tilt_is_one", zero <= 1e-12, zero, 1e-12))

    # nondecreasing in t for positively correlated models
    drops = 0.0
    for m, top in ((SubsampledER(0.3, 0.5), 2.0), (Gaussian(0.5), 0.6)):
        ts = np.linspace(0.0, top, 41)
        for k in (1, 2, 3, 5):
            vals = [orbit_mgf_m(m, t, k) for t in ts]
            drops = max(drops, max(0.0, *(vals[i] - vals[i + 1] for i in range(len(vals) - 1))))
    out.append(Check("mgf", "m_nondecreasing_in_t", drops <= 1e-12, drops, 1e-12))
    return out


def suite_bounds() -> list[Check]:
    out = []
    worst = -math.inf
    for model, t in power_bound_grid():
        rep = mgf_power_bounds(model, t, 12)
        for v in (rep.m_violation, rep.l_violation):
            if v is not None:
                worst = max(worst, v)
    out.append(Check("bounds", "power_bounds_k_le_12", worst <= 1e-12, worst, 1e-12))

    worst_q, worst_t, worst_ratio = math.inf, math.inf, 0.0
    for p, s in m2_grid():
        for t in (0.0, 2.0 ** -10, math.log(1 / p)):
            b = m2_upper_bounds(p, s, t)
            mg = b.margins()
            if mg["small_q"] is not None:
                worst_q = min(worst_q, mg["small_q"])
                worst_ratio = max(worst_ratio, b.m1_sq_over_m2)
            if mg["small_t"] is not None:
                worst_t = min(worst_t, mg["small_t"])
    out.append(Check("bounds", "m2_small_q_bound", worst_q >= -1e-12, worst_q, -1e-12))
    out.append(Check("bounds", "m2_small_t_bound", worst_t >= -1e-12, worst_t, -1e-12))
    out.append(Check("bounds", "m1_sq_over_m2_le_e2", worst_ratio <= math.e ** 2, worst_ratio, math.e ** 2))

    worst = 0.0
    for c in (GeneralER(0.4, 0.15, 0.15, 0.3), SubsampledER(0.3, 0.5).to_general(),
              SubsampledER(0.05, 0.8).to_general(), GeneralER(0.7, 0.05, 0.1, 0.15)):
        t = 0.5 * math.log(c.p00 * c.p11 / (c.p01 * c.p10))
        ref = 1 - 2 * (math.sqrt(c.p00 * c.p11) - math.sqrt(c.p01 * c.p10)) ** 2
        worst = max(worst, abs(orbit_mgf_l(c, t, 2) - ref))
    for rho in np.linspace(0.05, 0.95, 10):
        t = rho / (2 * (1 - rho * rho))
        worst = max(worst, abs(orbit_mgf_l(Gaussian(float(rho)), t, 2) - math.sqrt(1 - rho * rho)))
    out.append(Check("bounds", "optimal_tilt_l2_identities", worst <= 1e-12, worst, 1e-12))

    xs = np.linspace(0.0, 1.0, 1002)[1:-1]
    vals = [phi(float(x)) for x in xs]
    ok = all(vals[i] > vals[i + 1] for i in range(len(vals) - 1))
    out.append(Check("bounds", "phi_decreasing", ok, None, None, f"{len(xs)} grid points"))
    return out


def suite_orbits(count: int = 1000, seed: int = 0) -> list[Check]:
    root = Stream(seed)
    fixed_ok = sum_ok = node_ok = lemma_ok = True
    for r in range(count):
        st = root.spawn(r)
        n = 2 + int(st.u64(1)[0] % 29)
        sigma = Permutation(tuple(st.spawn(1).permutation(n).tolist()))
        dec = orbit_decomposition(sigma)
        fixed_ok &= dec.N_k(1) == math.comb(dec.n_k(1), 2) + dec.n_k(2)
        sum_ok &= sum(k * c for k, c in dec.edge_counts.items()) == edge_count(n)
        node_ok &= sum(k * c for k, c in dec.node_counts.items()) == n
        ident = Permutation.identity(n)
        n1 = round(n * overlap(ident, sigma))
        lemma_ok &= math.comb(n1, 2) <= round(edge_count(n) * edge_fixed_fraction(ident, sigma))
    return [
        Check("orbits", "fixed_edges_from_node_orbits", bool(fixed_ok), detail=f"{count} permutations"),
        Check("orbits", "edge_orbit_lengths_sum", bool(sum_ok), detail=f"{count} permutations"),
        Check("orbits", "node_orbit_lengths_sum", bool(node_ok), detail=f"{count} permutations"),
        Check("orbits", "edge_to_node_fixed_inequality", bool(lemma_ok), detail=f"{count} permutations"),
    ]


def suite_tails(include_inverse_chernoff: bool = True) -> list[Check]:
    out = []
    worst = 0.0
    for a, b in ((0.25, 0.25), (0.3, 0.1), (0.05, 0.6), (0.5, 0.5)):
        for n in range(1, 9):
            for tau in (-n - 1, -2, -0.5, 0, 1, 2.5, n + 1):
                worst = max(worst, abs(trinomial_tail(a, b, n, tau) - trinomial_tail_enumeration(a, b, n, tau)))
    out.append(Check("tails", "dp_vs_enumeration", worst <= 1e-12, worst, 1e-12))

    mass = max(abs(math.fsum(trinomial_pmf(0.3, 0.2, n)) - 1) for n in (10, 1000, 20000))
    out.append(Check("tails", "pmf_total_mass", mass <= 1e-12 * 20000, mass, 1e-12 * 20000))

    taus = np.linspace(-60, 60, 121)
    vals = [trinomial_tail(0.2, 0.15, 200, float(t)) for t in taus]
    rises = max(vals[i + 1] - vals[i] for i in range(len(vals) - 1))
    out.append(Check("tails", "tail_nonincreasing_in_tau", rises <= 0.0, rises, 0.0))

    if include_inverse_chernoff:
        grid = inverse_chernoff_grid()
        worst = math.inf
        for a, b, n, tau, _, _ in grid:
            worst = min(worst, trinomial_tail(a, b, n, tau) / inverse_chernoff_bound(a, b, n, 0.5))
        out.append(Check("tails", "inverse_chernoff_lower_bound", bool(grid) and worst >= 1.0, worst, 1.0,
                         f"min tail/bound over {len(grid)} grid points"))
    return out


def suite_bayes(num_outer: int = 400, seed: int = 0) -> list[Check]:
    out = []
    worst, lo = -math.inf, math.inf
    for n in (3, 4):
        for model in BAYES_MI_MODELS:
            mi = exact_mutual_information(model, n)
            cap = min(edge_count(n) * edge_pair_mi(model), math.log(math.factorial(n)))
            worst = max(worst, mi - cap)
            lo = min(lo, mi)
    out.append(Check("bayes", "mi_upper_bound", worst <= 1e-9, worst, 1e-9))
    out.append(Check("bayes", "mi_nonnegative", lo >= -1e-12, lo, -1e-12))

    p, s, n = 0.5, 0.9, 4
    thetas = np.linspace(p * s, s, 5)
    ests = [mmse_of_relabeled_graph(InterpolatedModel.er(p, s, float(th)), n, num_outer, seed) for th in thetas]
    rises = max((ests[i + 1].value - ests[i].value) / math.hypot(ests[i].stderr, ests[i + 1].stderr)
                for i in range(len(ests) - 1))
    out.append(Check("bayes", "mmse_nonincreasing_in_theta", rises <= 3.0, rises, 3.0,
                     "largest rise in combined standard errors; values "
                     + ", ".join(f"{e.value:.4f}" for e in ests)))
    null = ests[0]
    out.append(Check("bayes", "mmse_null_below_trivial",
                     0.0 <= null.value <= null.trivial_error + 3 * null.stderr,
                     null.value, null.trivial_error))
    return out


def run_suites(names=SUITES, **kw) -> list[Check]:
    table = {"mgf": suite_mgf, "bounds": suite_bounds, "bayes": suite_bayes,
             "orbits": suite_orbits, "tails": suite_tails}
    out = []
    for name in names:
        out += table[name](**kw.get(name, {}))
    return out


def format_table(checks: list[Check]) -> str:
    width = max((len(c.suite) + len(c.name) + 1 for c in checks), default=10)
    lines = []
    for c in checks:
        label = f"{c.suite}.{c.name}"
        val = "" if c.value is None else f"{c.value:.6g}"
        lim = "" if c.limit is None else f"(limit {c.limit:.6g})"
        lines.append(f"{'PASS' if c.passed else 'FAIL'}  {label:<{width}}  {val} {lim} {c.detail}".rstrip())
    return "\n".join(lines)
