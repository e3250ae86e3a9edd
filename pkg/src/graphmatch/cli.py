"""Command-line entry point: ``graphmatch {gen,solve,sweep,theory,verify}``."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .errors import GraphMatchError
from .estimators import EXACT_CAP, solve_exact, solve_local
from .models import Gaussian, GeneralER, MatchInstance, SubsampledER, model_to_dict, sample_instance
from .perm import Permutation
from .theory import edge_pair_mi, threshold_report
from .verify import SUITES, format_table, run_suites


def _add_model_args(p: argparse.ArgumentParser):
    p.add_argument("--model", required=True, choices=["gaussian", "subsampled_er", "general_er"])
    p.add_argument("--rho", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--pmf", type=float, nargs=4, metavar=("P00", "P01", "P10", "P11"))


def _model(args):
    def need(*names):
        missing = [n for n in names if getattr(args, n) is None]
        if missing:
            raise SystemExit(f"--model {args.model} needs --{' --'.join(missing)}")

    if args.model == "gaussian":
        need("rho")
        return Gaussian(args.rho)
    if args.model == "subsampled_er":
        need("p", "s")
        return SubsampledER(args.p, args.s)
    need("pmf")
    return GeneralER(*args.pmf)


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_gen(args):
    if args.pi in ("uniform", "identity"):
        mode = args.pi
    else:
        mode = Permutation.parse(args.pi)
    inst = sample_instance(_model(args), args.n, mode, args.seed)
    _write(inst.to_json(), args.output)
    return 0


def cmd_solve(args):
    with open(args.instance, encoding="utf-8") as fh:
        inst = MatchInstance.from_json(fh.read())
    if args.method == "exact":
        res = solve_exact(inst, sign=args.sign, cap=args.cap)
    else:
        res = solve_local(inst, restarts=args.restarts, seed=args.seed,
                          use_truth=not args.no_truth_start, sign=args.sign)
    _write(json.dumps(res.to_dict(inst)), args.output)
    return 0


def cmd_sweep(args):
    with open(args.config, encoding="utf-8") as fh:
        config = harness.SweepConfig.from_dict(json.load(fh))
    records = harness.run_sweep(config, args.workers)
    _write(harness.records_to_csv(records, timing=args.timing), args.output)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8", newline="") as fh:
            harness.write_summary_csv(harness.aggregate(records, config.deltas), fh)
    return 0


def cmd_theory(args):
    model = _model(args)
    rep = threshold_report(model, args.n, eps=args.eps, regime=args.regime).to_dict()
    rep["edge_pair_mi"] = edge_pair_mi(model)
    rep["model"] = model_to_dict(model)
    print(json.dumps(rep, indent=2))
    return 0


def cmd_verify(args):
    names = [s for s in SUITES if getattr(args, s)] or list(SUITES)
    kw = {"mgf": {"mc_samples": args.mc_samples}, "bayes": {"num_outer": args.num_outer}}
    checks = run_suites(names, **{k: v for k, v in kw.items() if k in names})
    fmt = args.format or ("json" if names == ["bayes"] else "table")
    if fmt == "json":
        print(json.dumps({"passed": all(c.passed for c in checks),
                          "checks": [c.to_dict() for c in checks]}, indent=2))
    else:
        print(format_table(checks))
        print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed")
    return 0 if all(c.passed for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphmatch", description="Correlated random graph matching toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample an instance and print it as JSON")
    _add_model_args(g)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--pi", default="uniform", help="'uniform', 'identity' or a one-line permutation like '1 0 2'")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="recover the matching of an instance JSON")
    s.add_argument("instance")
    s.add_argument("--method", choices=["exact", "local"], default="exact")
    s.add_argument("--cap", type=int, default=EXACT_CAP, help="largest n for exhaustive search")
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sign", choices=["positive", "negative", "zero"])
    s.add_argument("--no-truth-start", action="store_true", help="do not seed local search at the truth")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a Monte Carlo sweep from a config JSON and emit CSV")
    w.add_argument("config")
    w.add_argument("-o", "--output")
    w.add_argument("--summary", help="also write per-cell summaries to this CSV")
    w.add_argument("--workers", type=int, help=f"worker processes (default: ${harness.THREADS_ENV} or 1)")
    w.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("theory", help="print the threshold report for a model and n")
    _add_model_args(t)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--eps", type=float, default=0.0)
    t.add_argument("--regime", choices=["auto", "dense", "sparse"], default="auto")
    t.set_defaults(func=cmd_theory)

    v = sub.add_parser("verify", help="run invariant suites; exit status 0 iff all pass",
                       description="With no suite flags every suite runs.")
    for name in SUITES:
        v.add_argument(f"--{name}", action="store_true", help=f"run the {name} suite")
    v.add_argument("--format", choices=["table", "json"])
    v.add_argument("--mc-samples", type=int, default=0, help="Gaussian MGF Monte Carlo samples (0 skips)")
    v.add_argument("--num-outer", type=int, default=400, help="outer samples per mmse estimate")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GraphMatchError, ValueError, TypeError, OSError) as exc:
        print(f"graphmatch: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
