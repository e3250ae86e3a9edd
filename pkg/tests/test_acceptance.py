"""Acceptance criteria, one test each, at their stated tolerances."""
import csv
import io
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from graphmatch.bayes import (InterpolatedModel, exact_mutual_information, exact_posterior,
                              mmse_of_relabeled_graph)
from graphmatch.estimators import solve_exact
from graphmatch.harness import SweepConfig, aggregate, read_csv, records_to_csv, run_sweep
from graphmatch.models import Gaussian, GeneralER, SubsampledER, flip_model, sample_instance
from graphmatch.perm import Permutation, edge_count, edge_fixed_fraction, orbit_decomposition, overlap
from graphmatch.rng import Stream
from graphmatch.theory import (edge_pair_mi, gaussian_l_tilt_limit, gaussian_m_tilt_limit,
                               inverse_chernoff_bound, m2_upper_bounds, mgf_power_bounds,
                               orbit_mgf_l, orbit_mgf_m, trinomial_tail)
from graphmatch.verify import (BAYES_MI_MODELS, ER_MGF_GRID, GAUSSIAN_MGF_GRID,
                               er_cyclic_mgf_enumeration, gaussian_cyclic_mgf_mc,
                               inverse_chernoff_grid, m2_grid, power_bound_grid)

DATA = Path(__file__).parent / "data"


@pytest.mark.criterion(1, "ER orbit MGF equals exhaustive enumeration")
def test_c01_er_mgf_oracle(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for p, s, t in ER_MGF_GRID:
        m = SubsampledER(p, s)
        for k in range(1, 6):
            worst = max(worst, abs(orbit_mgf_m(m, t, k) - er_cyclic_mgf_enumeration(m, t, k, "M")))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 1.0
    criterion(ok, f"max abs error {worst:.3g} (tol 1e-12), {dt:.2f}s (limit 1s)")
    assert ok


@pytest.mark.criterion(2, "Gaussian orbit MGF agrees with Monte Carlo")
def test_c02_gaussian_mgf_monte_carlo(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for rho, t in GAUSSIAN_MGF_GRID:
        assert t <= gaussian_m_tilt_limit(rho)
        for k in (1, 2, 3):
            est, _ = gaussian_cyclic_mgf_mc(rho, t, k, 10_000_000, seed=100 * k + int(10 * rho))
            worst = max(worst, abs(orbit_mgf_m(Gaussian(rho), t, k) - est) / est)
    dt = time.perf_counter() - t0
    ok = worst <= 0.01 and dt < 30.0
    criterion(ok, f"max relative error {worst:.3g} (tol 0.01), {dt:.1f}s (limit 30s)")
    assert ok


@pytest.mark.criterion(3, "power bounds M_k <= M_2^(k/2), L_k <= L_2^(k/2)")
def test_c03_power_bounds(criterion):
    worst, count = -math.inf, 0
    for model, t in power_bound_grid():
        rep = mgf_power_bounds(model, t, 12)
        for v in (rep.m_violation, rep.l_violation):
            if v is not None:
                worst = max(worst, v)
                count += 1
    ok = worst <= 1e-12
    criterion(ok, f"max relative violation {worst:.3g} over {count} (model, t, kind) cases, k <= 12")
    assert ok


@pytest.mark.criterion(4, "M_2 closed-form bounds dominate the exact M_2")
def test_c04_m2_bounds(criterion):
    worst, ratio, cases = math.inf, 0.0, 0
    for p, s in m2_grid():
        t_big = min(math.log(1 / p), 10.0)
        for t in (2.0 ** -10, t_big):
            b = m2_upper_bounds(p, s, t)
            for v in b.margins().values():
                if v is not None:
                    worst = min(worst, v)
                    cases += 1
            if b.bound_small_q is not None:
                ratio = max(ratio, b.m1_sq_over_m2)
    ok = worst >= -1e-12 and ratio <= math.e ** 2
    criterion(ok, f"min bound - exact {worst:.3g} over {cases} cases; max M1^2/M2 {ratio:.4g} (<= e^2)")
    assert ok


@pytest.mark.criterion(5, "optimal-tilt identities for L_2")
def test_c05_optimal_tilt(criterion):
    worst = 0.0
    for p in (0.05, 0.2, 0.5, 0.8):
        for s in (0.1, 0.5, 0.9):
            c = SubsampledER(p, s).to_general()
            t = 0.5 * math.log(c.p00 * c.p11 / (c.p01 * c.p10))
            ref = 1 - 2 * (math.sqrt(c.p00 * c.p11) - math.sqrt(c.p01 * c.p10)) ** 2
            worst = max(worst, abs(orbit_mgf_l(c, t, 2) - ref))
    c = GeneralER(0.4, 0.15, 0.15, 0.3)
    ref = 1 - 2 * (math.sqrt(0.4 * 0.3) - math.sqrt(0.15 * 0.15)) ** 2
    worst = max(worst, abs(orbit_mgf_l(c, 0.5 * math.log(0.12 / 0.0225), 2) - ref))
    for rho in np.linspace(0.05, 0.95, 19):
        t = rho / (2 * (1 - rho * rho))
        assert t <= gaussian_l_tilt_limit(rho)
        worst = max(worst, abs(orbit_mgf_l(Gaussian(float(rho)), float(t), 2) - math.sqrt(1 - rho * rho)))
    ok = worst <= 1e-12
    criterion(ok, f"max abs error {worst:.3g} (tol 1e-12)")
    assert ok


@pytest.mark.criterion(6, "orbit identities over 1000 random permutations")
def test_c06_orbit_identities(criterion):
    t0 = time.perf_counter()
    root = Stream(2024)
    bad = 0
    for r in range(1000):
        st = root.spawn(r)
        n = int(st.u64(1)[0] % 31)  # 0..30
        sigma = Permutation(tuple(st.spawn(1).permutation(n).tolist()))
        dec = orbit_decomposition(sigma)
        bad += dec.N_k(1) != math.comb(dec.n_k(1), 2) + dec.n_k(2)
        bad += sum(k * c for k, c in dec.edge_counts.items()) != edge_count(n)
        ident = Permutation.identity(n)
        n1 = sum(1 for i in range(n) if sigma(i) == i)
        bad += math.comb(n1, 2) > round(edge_count(n) * edge_fixed_fraction(ident, sigma))
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 1.0
    criterion(ok, f"{bad} violations, {dt:.2f}s (limit 1s)")
    assert ok


@pytest.mark.criterion(7, "flip coherence and complement invariance of the MLE")
def test_c07_flip_coherence(criterion):
    worst = 0.0
    for p in np.linspace(0.1, 1.0, 5):
        for s in np.linspace(0.2, 0.95, 4):
            p2, s2 = flip_model(float(p), float(s))
            p3, s3 = flip_model(p2, s2)
            worst = max(worst, abs(p2 * s2 - (1 - p * s)), abs(p3 - p), abs(s3 - s))
    mismatches = 0
    for seed in range(50):
        inst = sample_instance(SubsampledER(0.5, 0.6), 6, seed=seed)
        a = solve_exact(inst)
        b = solve_exact(inst.complement(), sign="positive")
        mismatches += [o.image for o in a.optimizers] != [o.image for o in b.optimizers]
    ok = worst <= 1e-12 and mismatches == 0
    criterion(ok, f"flip error {worst:.3g} (tol 1e-12); {mismatches}/50 optimizer-set mismatches")
    assert ok


@pytest.mark.criterion(8, "posterior mode set equals exhaustive optimizer set")
def test_c08_bayes_mle_agreement(criterion):
    models = [SubsampledER(0.5, 0.7), SubsampledER(0.2, 0.9), Gaussian(0.8), GeneralER(0.1, 0.4, 0.35, 0.15)]
    mismatches = 0
    for seed in range(100):
        inst = sample_instance(models[seed % 4], 5, seed=seed)
        mismatches += exact_posterior(inst).mode_set() != solve_exact(inst).optimizers
    ok = mismatches == 0
    criterion(ok, f"{mismatches}/100 mismatches at n=5")
    assert ok


@pytest.mark.criterion(9, "exact mutual information within [0, C(n,2) I(P)]")
def test_c09_mi_bound(criterion):
    t0 = time.perf_counter()
    worst, lo = -math.inf, math.inf
    for n in (3, 4):
        for model in BAYES_MI_MODELS:
            mi = exact_mutual_information(model, n)
            worst = max(worst, mi - edge_count(n) * edge_pair_mi(model))
            lo = min(lo, mi)
    dt = time.perf_counter() - t0
    ok = lo >= 0 and worst <= 1e-9 and dt < 120
    criterion(ok, f"min I {lo:.3g}, max I - bound {worst:.3g} (tol 1e-9), {dt:.1f}s (limit 120s)")
    assert ok


@pytest.mark.criterion(10, "mmse nonincreasing in theta within 3 standard errors")
def test_c10_mmse_monotone(criterion):
    p, s, n = 0.5, 0.9, 4
    thetas = np.linspace(p * s, s, 5)
    ests = [mmse_of_relabeled_graph(InterpolatedModel.er(p, s, float(t)), n, 4000, seed=7) for t in thetas]
    rises = [(b.value - a.value) / math.hypot(a.stderr, b.stderr) for a, b in zip(ests, ests[1:])]
    ok = max(rises) <= 3.0
    vals = ", ".join(f"{e.value:.4f}+-{e.stderr:.4f}" for e in ests)
    criterion(ok, f"mmse over theta grid [{vals}]; largest rise {max(rises):.2f} SE (limit 3)")
    assert ok


@pytest.mark.criterion(11, "inverse-Chernoff lower bound on the exact trinomial tail")
def test_c11_inverse_chernoff(criterion):
    t0 = time.perf_counter()
    grid = inverse_chernoff_grid()
    ratios = [trinomial_tail(a, b, n, tau) / inverse_chernoff_bound(a, b, n, 0.5)
              for a, b, n, tau, _, _ in grid]
    dt = time.perf_counter() - t0
    worst = min(ratios)
    ok = bool(grid) and worst >= 1.0 and dt < 10.0
    criterion(ok, f"min tail/bound {worst:.3g} over {len(grid)} grid points "
                  f"(need >= 1), {sum(r >= 1 for r in ratios)} pass, {dt:.1f}s (limit 10s)")
    assert ok


@pytest.mark.criterion(12, "per-term law of the transposition statistic")
def test_c12_trinomial_law(criterion):
    p, s = 0.3, 0.6
    model = SubsampledER(p, s)
    inst = sample_instance(model, 2001, "uniform", seed=12)  # 2,001,000 i.i.d. edge pairs
    x, y = inst.relabeled_a(), inst.B
    m = 10 ** 6
    term = (x[0:2 * m:2] - x[1:2 * m:2]) * (y[0:2 * m:2] - y[1:2 * m:2])
    c = model.to_general()
    a, b = 2 * c.p00 * c.p11, 2 * c.p01 * c.p10
    emp = {v: float(np.mean(term == v)) for v in (1, -1, 0)}
    dev = max(abs(emp[1] - a), abs(emp[-1] - b), abs(emp[0] - (1 - a - b)))
    ok = dev <= 0.003
    criterion(ok, f"max cell deviation {dev:.2g} (tol 0.003) at 10^6 samples")
    assert ok


def _summary_rows(records):
    return aggregate(records, deltas=(0.5, 0.9))


@pytest.mark.criterion(13, "phase-transition trend, Gaussian n=8 exhaustive")
def test_c13_phase_transition(criterion):
    t0 = time.perf_counter()
    cfg = SweepConfig.from_dict(json.loads((DATA / "phase_transition_config.json").read_text(encoding="utf-8")))
    records = run_sweep(cfg)
    dt = time.perf_counter() - t0
    golden = read_csv(io.StringIO((DATA / "phase_transition_golden.csv").read_text(encoding="utf-8")))
    same = len(golden) == len(records) and all(
        (g.seed, g.overlap, g.exact, g.d) == (r.seed, r.overlap, r.exact, r.d)
        and math.isclose(g.objective, r.objective, rel_tol=1e-12, abs_tol=1e-12)
        for g, r in zip(golden, records))
    summ = _summary_rows(records)
    means = [c.mean_overlap for c in summ]
    separated = all(b.overlap_ci[0] > a.overlap_ci[1] for a, b in zip(summ, summ[1:]))
    ok = (same and separated and means[0] <= 0.45 and summ[-1].p_exact >= 0.85 and dt < 300)
    criterion(ok, "mean overlap " + ", ".join(f"{m:.3f}" for m in means)
              + f"; P(exact) at top {summ[-1].p_exact:.3f}; intervals separated={separated}; "
                f"matches golden={same}; {dt:.0f}s (limit 300s)")
    assert ok


@pytest.mark.criterion(14, "sweep CSV byte-identical for 1 and 8 workers")
def test_c14_determinism(criterion):
    cfg = SweepConfig.from_dict({"family": "subsampled_er", "n": [6, 7], "grid": {"p": [0.4, 0.8], "s": [0.7, 0.9]},
                                 "trials": 25, "estimator": "exact", "base_seed": 99})
    one = records_to_csv(run_sweep(cfg, workers=1))
    eight = records_to_csv(run_sweep(cfg, workers=8))
    ok = one == eight
    criterion(ok, f"{len(one.splitlines()) - 1} rows, identical={ok}")
    assert ok
