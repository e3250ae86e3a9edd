import io
import json
import math

import numpy as np
import pytest

from graphmatch.errors import ConfigError
from graphmatch.harness import (CSV_COLUMNS, SweepConfig, TrialRecord, aggregate, canonical_json,
                                fnv1a64, read_csv, records_to_csv, run_sweep, trial_seed,
                                wilson_interval, worker_count, write_summary_csv)
from graphmatch.models import flip_model


def small_config(**kw):
    base = {"family": "subsampled_er", "n": [5], "grid": {"p": [0.5], "s": [0.6, 0.9]},
            "trials": 6, "estimator": "exact", "base_seed": 11}
    base.update(kw)
    return SweepConfig.from_dict(base)


def test_fnv1a_reference_vectors():
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_canonical_json_sorted_compact():
    assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'


def test_trial_seed_formula():
    from graphmatch.rng import splitmix64
    h = 0x1234
    assert trial_seed(7, 0, h) == splitmix64(7 ^ 0x9E3779B97F4A7C15 ^ h)


def test_cell_hash_ignores_grid_order():
    a = small_config(grid={"p": [0.5], "s": [0.6, 0.9]}).cells()
    b = small_config(grid={"p": [0.5], "s": [0.9, 0.6]}).cells()
    assert {c.hash() for c in a} == {c.hash() for c in b}


@pytest.mark.parametrize("bad,field", [
    ({"family": "potts"}, "family"),
    ({"trials": 0}, "trials"),
    ({"n": [11]}, "n[0]"),
    ({"n": [5, 1]}, "n[1]"),
    ({"estimator": "greedy"}, "estimator"),
    ({"grid": {}}, "grid"),
    ({"grid": {"p": [0.5], "s": []}}, "grid.s"),
    ({"grid": {"p": [0.5], "s": [1.5]}}, "grid.p[0].s"),
    ({"deltas": [0.5, 1.5]}, "deltas[1]"),
    ({"surprise": 1}, "surprise"),
])
def test_config_errors_carry_field_paths(bad, field):
    with pytest.raises(ConfigError) as exc:
        small_config(**bad)
    assert exc.value.field == field


def test_gaussian_linear_coordinate_overflow():
    with pytest.raises(ConfigError) as exc:
        SweepConfig.from_dict({"family": "gaussian", "n": [8], "grid": {"x": [1, 8]}, "trials": 1})
    assert exc.value.field == "grid.x[1]"


def test_gaussian_coordinates():
    n = 1000
    c = SweepConfig.from_dict({"family": "gaussian", "n": [n], "grid": {"x": [2.0]}, "trials": 1,
                               "estimator": "local"}).cells()[0]
    assert n * c.model.rho ** 2 / math.log(n) == pytest.approx(2.0)
    c = SweepConfig.from_dict({"family": "gaussian", "n": [n], "grid": {"x_mi": [2.0]}, "trials": 1,
                               "estimator": "local"}).cells()[0]
    assert -n * math.log(1 - c.model.rho ** 2) / math.log(n) == pytest.approx(2.0)


def test_er_coordinate():
    n, p, x = 2000, 0.3, 1.5
    c = SweepConfig.from_dict({"family": "subsampled_er", "n": [n], "grid": {"p": [p], "x": [x]},
                               "trials": 1, "estimator": "local"}).cells()[0]
    s = c.model.s
    assert n * p * s * s * (math.log(1 / p) - 1 + p) / math.log(n) == pytest.approx(x)


def test_records_are_consistent():
    recs = run_sweep(small_config())
    assert len(recs) == 12
    for r in recs:
        assert 0.0 <= r.overlap <= 1.0
        assert r.exact == (r.overlap == 1.0) == (r.d == 0)


def test_rerun_is_identical():
    cfg = small_config(trials=1)
    assert records_to_csv(run_sweep(cfg)) == records_to_csv(run_sweep(cfg))


def test_worker_count_does_not_change_output():
    cfg = small_config()
    assert records_to_csv(run_sweep(cfg, workers=1)) == records_to_csv(run_sweep(cfg, workers=3))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("GRAPHMATCH_THREADS", "4")
    assert worker_count() == 4
    assert worker_count(2) == 2
    monkeypatch.setenv("GRAPHMATCH_THREADS", "many")
    with pytest.raises(ConfigError):
        worker_count()


def test_auto_flip_matches_direct_flipped_run():
    p, s = 0.8, 0.9
    auto = run_sweep(small_config(grid={"p": [p], "s": [s]}))
    p2, s2 = flip_model(p, s)
    direct = run_sweep(small_config(grid={"p": [p2], "s": [s2]}))
    assert "orig_p=" in auto[0].variant_params and "orig_p=" not in direct[0].variant_params
    for a, b in zip(auto, direct):
        assert (a.seed, a.objective, a.overlap, a.d) == (b.seed, b.objective, b.overlap, b.d)


def test_csv_schema_and_formatting():
    text = records_to_csv(run_sweep(small_config(trials=2)))
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    for line in lines[1:]:
        assert line.endswith(",")  # runtime left blank without timing
    back = read_csv(io.StringIO(text))
    assert records_to_csv(back) == text


def test_csv_timing_column():
    recs = run_sweep(small_config(trials=1))
    text = records_to_csv(recs, timing=True)
    assert all(float(line.rsplit(",", 1)[1]) >= 0 for line in text.splitlines()[1:])


def fixture_records():
    mk = lambda t, ov, d: TrialRecord("gaussian", "rho=0.5", 4, t, t, "exact", 1.0, ov, d == 0, d)
    return [mk(0, 1.0, 0), mk(1, 0.5, 2), mk(2, 0.25, 3), mk(3, 1.0, 0)]


def test_aggregate_fixture():
    (s,) = aggregate(fixture_records(), deltas=(0.5, 0.9))
    assert s.trials == 4
    assert s.mean_overlap == pytest.approx(0.6875)
    assert s.p_exact == 0.5
    assert s.p_overlap_ge[0.5][0] == 0.75
    assert s.p_overlap_ge[0.9][0] == 0.5
    assert s.mean_d == pytest.approx(1.25)
    lo, hi = s.p_exact_ci
    assert lo < 0.5 < hi


def test_aggregate_all_exact():
    recs = [TrialRecord("gaussian", "rho=0.9", 5, t, t, "exact", 1.0, 1.0, True, 0) for t in range(20)]
    (s,) = aggregate(recs)
    assert s.p_exact == 1.0 and s.p_exact_ci[1] == 1.0
    assert s.overlap_ci == (1.0, 1.0)


def test_wilson_reference():
    lo, hi = wilson_interval(5, 10)
    z = 1.959963984540054
    centre = (0.5 + z * z / 20) / (1 + z * z / 10)
    half = z * math.sqrt(0.25 / 10 + z * z / 400) / (1 + z * z / 10)
    assert lo == pytest.approx(centre - half, abs=1e-9)
    assert hi == pytest.approx(centre + half, abs=1e-9)


def test_summary_csv():
    buf = io.StringIO()
    write_summary_csv(aggregate(fixture_records()), buf)
    head = buf.getvalue().splitlines()[0].split(",")
    assert head[:5] == ["model", "variant_params", "n", "trials", "mean_overlap"]
    assert "p_overlap_ge_0.5" in head


@pytest.mark.slow
def test_exact_rate_monotone_in_rho():
    rhos = [0.2, 0.4, 0.6, 0.75, 0.9, 0.98]
    cfg = SweepConfig.from_dict({"family": "gaussian", "n": [7], "grid": {"rho": rhos},
                                 "trials": 200, "estimator": "exact", "base_seed": 5})
    summ = aggregate(run_sweep(cfg))
    for a, b in zip(summ, summ[1:]):
        # nondecreasing up to interval overlap
        assert b.p_exact_ci[1] >= a.p_exact_ci[0]
        assert b.p_exact >= a.p_exact or b.p_exact_ci[1] >= a.p_exact
    assert summ[-1].p_exact > summ[0].p_exact
