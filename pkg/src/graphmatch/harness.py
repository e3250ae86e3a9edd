"""
Seeded Monte Carlo sweeps over model grids.

Every trial is a pure function of ``(cell, trial index, base seed)``, so the
emitted records do not depend on the number of worker processes.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np
from scipy.stats import binomtest

from .errors import ConfigError
from .estimators import EXACT_CAP, solve_exact, solve_local
from .models import (Gaussian, GeneralER, SubsampledER, flip_model, model_from_dict,
                     model_to_dict, sample_instance)
from .perm import nonfixed_distance, overlap
from .rng import GOLDEN, MASK64, splitmix64
from .theory import threshold_report

CSV_COLUMNS = ["model", "variant_params", "n", "trial", "seed", "estimator",
               "objective", "overlap", "exact", "d", "runtime_ms"]
FAMILIES = ("gaussian", "subsampled_er", "general_er")
THREADS_ENV = "GRAPHMATCH_THREADS"
Z95 = 1.959963984540054


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Cell:
    n: int
    model: object
    flipped_from: dict | None = None
    x: float | None = None

    def key(self) -> dict:
        return {"n": self.n, "model": model_to_dict(self.model)}

    def hash(self) -> int:
        return fnv1a64(canonical_json(self.key()).encode("utf-8"))

    def variant_params(self) -> str:
        parts = [f"{k}={fmt_float(v)}" for k, v in self.model.params.items()]
        if self.flipped_from:
            parts += [f"orig_{k}={fmt_float(v)}" for k, v in self.flipped_from.items()]
        return ";".join(parts)


def trial_seed(base_seed: int, trial: int, cell_hash: int) -> int:
    return splitmix64(base_seed ^ ((GOLDEN * (trial + 1)) & MASK64) ^ cell_hash)


@dataclass
class SweepConfig:
    family: str
    n: list[int]
    grid: dict
    trials: int = 100
    estimator: str = "exact"
    restarts: int = 32
    base_seed: int = 0
    deltas: list[float] = field(default_factory=lambda: [0.5, 0.9])
    eps: float = 0.0
    exact_cap: int = EXACT_CAP
    use_truth: bool = True
    auto_flip: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError("family", f"must be one of {FAMILIES}, got {self.family!r}")
        if not self.n:
            raise ConfigError("n", "needs at least one vertex count")
        for i, n in enumerate(self.n):
            if not isinstance(n, int) or n < 2:
                raise ConfigError(f"n[{i}]", f"must be an integer >= 2, got {n!r}")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.estimator not in ("exact", "local"):
            raise ConfigError("estimator", f"must be 'exact' or 'local', got {self.estimator!r}")
        if self.estimator == "exact":
            for i, n in enumerate(self.n):
                if n > self.exact_cap:
                    raise ConfigError(f"n[{i}]", f"{n} exceeds the exhaustive cap {self.exact_cap}")
        if self.restarts < 1:
            raise ConfigError("restarts", "must be >= 1")
        for i, d in enumerate(self.deltas):
            if not 0.0 < d <= 1.0:
                raise ConfigError(f"deltas[{i}]", f"must lie in (0, 1], got {d}")
        self.cells()  # validates the grid

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown config key")
        for key in ("family", "n", "grid"):
            if key not in d:
                raise ConfigError(key, "missing")
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def cells(self) -> list[Cell]:
        g = self.grid
        if not isinstance(g, dict) or not g:
            raise ConfigError("grid", "must be a non-empty mapping")
        out = []
        for n in self.n:
            logn = math.log(n)
            if self.family == "gaussian":
                if "rho" in g:
                    for i, rho in enumerate(_nonempty(g, "rho")):
                        out.append(Cell(n, _build(f"grid.rho[{i}]", Gaussian, rho=rho)))
                elif "x" in g:
                    for i, x in enumerate(_nonempty(g, "x")):
                        rho2 = x * logn / n
                        if not 0.0 <= rho2 <= 1.0:
                            raise ConfigError(f"grid.x[{i}]", f"gives rho^2 = {rho2} outside [0, 1] at n={n}")
                        out.append(Cell(n, Gaussian(math.sqrt(rho2)), x=x))
                elif "x_mi" in g:
                    # -log(1 - rho^2) = x log n / n; agrees with 'x' to first order
                    for i, x in enumerate(_nonempty(g, "x_mi")):
                        if x < 0:
                            raise ConfigError(f"grid.x_mi[{i}]", f"must be >= 0, got {x}")
                        rho2 = -math.expm1(-x * logn / n)
                        out.append(Cell(n, Gaussian(math.sqrt(rho2)), x=x))
                else:
                    raise ConfigError("grid", "gaussian grids need 'rho', 'x' or 'x_mi'")
            elif self.family == "subsampled_er":
                ps = _nonempty(g, "p")
                if "s" in g:
                    pairs = [(f"grid.p[{a}]", p, s, None) for a, p in enumerate(ps) for s in _nonempty(g, "s")]
                elif "x" in g:
                    pairs = []
                    for a, p in enumerate(ps):
                        if not 0.0 < p < 1.0:
                            raise ConfigError(f"grid.p[{a}]", f"must lie in (0, 1), got {p}")
                        gap = math.log(1 / p) - 1 + p
                        for x in _nonempty(g, "x"):
                            s = math.sqrt(x * logn / (n * p * gap))
                            pairs.append((f"grid.x", p, s, x))
                else:
                    raise ConfigError("grid", "subsampled_er grids need 's' or 'x' next to 'p'")
                for path, p, s, x in pairs:
                    model = _build(path, SubsampledER, p=p, s=s)
                    flipped = None
                    if self.auto_flip and model.q > 0.5:
                        flipped = dict(model.params)
                        model = SubsampledER(*flip_model(model.p, model.s))
                    out.append(Cell(n, model, flipped, x))
            else:
                for i, cells in enumerate(_nonempty(g, "pmf")):
                    if len(cells) != 4:
                        raise ConfigError(f"grid.pmf[{i}]", "needs four cells p00 p01 p10 p11")
                    out.append(Cell(n, _build(f"grid.pmf[{i}]", GeneralER, **dict(zip(("p00", "p01", "p10", "p11"), cells)))))
        return out


def _nonempty(g, key):
    vals = g.get(key)
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"grid.{key}", "must be a non-empty list")
    return vals


def _build(path, cls, **kw):
    try:
        return cls(**kw)
    except ConfigError as exc:
        raise ConfigError(f"{path}.{exc.field}", str(exc).split(": ", 1)[-1]) from None


@dataclass
class TrialRecord:
    model: str
    variant_params: str
    n: int
    trial: int
    seed: int
    estimator: str
    objective: float
    overlap: float
    exact: bool
    d: int
    runtime_ms: float | None = None

    def row(self, timing: bool = False) -> list[str]:
        return [self.model, self.variant_params, str(self.n), str(self.trial), str(self.seed),
                self.estimator, fmt_float(self.objective), fmt_float(self.overlap),
                "1" if self.exact else "0", str(self.d),
                fmt_float(self.runtime_ms) if timing and self.runtime_ms is not None else ""]


def _run_trial(task) -> TrialRecord:
    cell_key, variant_params, trial, seed, est = task
    model = model_from_dict(cell_key["model"])
    n = cell_key["n"]
    t0 = time.perf_counter()
    inst = sample_instance(model, n, "uniform", seed)
    if est["estimator"] == "exact":
        res = solve_exact(inst, cap=est["exact_cap"])
    else:
        res = solve_local(inst, restarts=est["restarts"], seed=splitmix64(seed ^ 0x5EED),
                          use_truth=est["use_truth"])
    ms = (time.perf_counter() - t0) * 1e3
    ov = overlap(inst.pi_true, res.pi_hat)
    d = nonfixed_distance(inst.pi_true, res.pi_hat)
    return TrialRecord(model.variant, variant_params, n, trial, seed, est["estimator"],
                       res.objective, ov, d == 0, d, ms)


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(THREADS_ENV, f"must be an integer, got {env!r}") from None
    return 1


def _tasks(config: SweepConfig):
    est = {"estimator": config.estimator, "restarts": config.restarts,
           "exact_cap": config.exact_cap, "use_truth": config.use_truth}
    for cell in config.cells():
        h = cell.hash()
        vp = cell.variant_params()
        key = cell.key()
        for t in range(config.trials):
            yield key, vp, t, trial_seed(config.base_seed, t, h), est


def iter_sweep(config: SweepConfig, workers: int | None = None) -> Iterator[TrialRecord]:
    """Records in (cell, trial) order whatever the worker count."""
    w = worker_count(workers)
    tasks = list(_tasks(config))
    if w == 1:
        yield from map(_run_trial, tasks)
        return
    with ProcessPoolExecutor(max_workers=w) as pool:
        yield from pool.map(_run_trial, tasks, chunksize=max(1, len(tasks) // (8 * w)))


def run_sweep(config: SweepConfig, workers: int | None = None) -> list[TrialRecord]:
    return list(iter_sweep(config, workers))


def write_csv(records: Iterable[TrialRecord], fh, timing: bool = False):
    """Write trial rows; ``runtime_ms`` stays blank unless ``timing`` is set."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row(timing))


def records_to_csv(records: Iterable[TrialRecord], timing: bool = False) -> str:
    buf = io.StringIO()
    write_csv(records, buf, timing)
    return buf.getvalue()


def read_csv(fh) -> list[TrialRecord]:
    out = []
    for row in csv.DictReader(fh):
        out.append(TrialRecord(
            model=row["model"], variant_params=row["variant_params"], n=int(row["n"]),
            trial=int(row["trial"]), seed=int(row["seed"]), estimator=row["estimator"],
            objective=float(row["objective"]), overlap=float(row["overlap"]),
            exact=row["exact"] == "1", d=int(row["d"]),
            runtime_ms=float(row["runtime_ms"]) if row["runtime_ms"] else None))
    return out


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class CellSummary:
    model: str
    variant_params: str
    n: int
    trials: int
    mean_overlap: float
    overlap_ci: tuple[float, float]
    p_exact: float
    p_exact_ci: tuple[float, float]
    p_overlap_ge: dict[float, tuple[float, float, float]]
    mean_d: float


def aggregate(records: Iterable[TrialRecord], deltas=(0.5, 0.9)) -> list[CellSummary]:
    """Per-cell means with 95% intervals, cells in order of first appearance."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.model, r.variant_params, r.n), []).append(r)
    out = []
    for (model, vp, n), rs in groups.items():
        m = len(rs)
        ov = np.array([r.overlap for r in rs])
        mean = float(ov.mean())
        half = Z95 * float(ov.std(ddof=1)) / math.sqrt(m) if m > 1 else 0.0
        k_exact = sum(r.exact for r in rs)
        ge = {}
        for dlt in deltas:
            k = int(np.sum(ov >= dlt - 1e-12))
            ge[dlt] = (k / m, *wilson_interval(k, m))
        out.append(CellSummary(model, vp, n, m, mean, (max(0.0, mean - half), min(1.0, mean + half)),
                               k_exact / m, wilson_interval(k_exact, m), ge,
                               float(np.mean([r.d for r in rs]))))
    return out


def write_summary_csv(summaries: list[CellSummary], fh):
    deltas = sorted({d for s in summaries for d in s.p_overlap_ge})
    w = csv.writer(fh, lineterminator="\n")
    head = ["model", "variant_params", "n", "trials", "mean_overlap", "overlap_lo", "overlap_hi",
            "p_exact", "p_exact_lo", "p_exact_hi", "mean_d"]
    for d in deltas:
        head += [f"p_overlap_ge_{d:g}", f"p_overlap_ge_{d:g}_lo", f"p_overlap_ge_{d:g}_hi"]
    w.writerow(head)
    for s in summaries:
        row = [s.model, s.variant_params, s.n, s.trials, fmt_float(s.mean_overlap),
               fmt_float(s.overlap_ci[0]), fmt_float(s.overlap_ci[1]), fmt_float(s.p_exact),
               fmt_float(s.p_exact_ci[0]), fmt_float(s.p_exact_ci[1]), fmt_float(s.mean_d)]
        for d in deltas:
            row += [fmt_float(v) for v in s.p_overlap_ge[d]]
        w.writerow(row)


def cell_regimes(config: SweepConfig) -> dict[str, str]:
    """Threshold classification per cell, keyed like the CSV's variant_params."""
    return {f"{c.n}|{c.variant_params()}": threshold_report(c.model, c.n, config.eps).classification
            for c in config.cells()}
