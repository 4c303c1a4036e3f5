"""Command-line entry point: ``ioamc <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction

from . import harness
from .amc import SS_ONLY_TESTS, TESTS, audsley_assign, get_test
from .model import TaskSet, ensure_priorities
from .simulator import SCENARIOS, Workload, replay, run
from .taskgen import GenParams, generate, pibs_to_ss


def _frac(text: str) -> Fraction:
    return Fraction(text)


def _grid(text: str) -> list:
    """``lo:hi:step`` or a comma list of utilizations."""
    if ":" in text:
        lo, hi, step = (Fraction(x) for x in text.split(":"))
        out, u = [], lo
        while u <= hi:
            out.append(u)
            u += step
        return out
    return [Fraction(x) for x in text.split(",")]


def _gen_params(args) -> GenParams:
    return GenParams(
        n_main=args.n_main, n_io=args.n_io, io_total_util=args.io_util,
        crit_factor=args.cf, p_hi=args.p_hi, period_range=(args.period_lo, args.period_hi),
        seed=args.seed,
    )


def _add_gen_flags(p: argparse.ArgumentParser, seed_required: bool) -> None:
    p.add_argument("--seed", type=int, required=seed_required, default=1)
    p.add_argument("--n-main", type=int, default=15)
    p.add_argument("--n-io", type=int, default=5)
    p.add_argument("--io-util", type=_frac, default=Fraction(1, 20))
    p.add_argument("--cf", type=_frac, default=Fraction(2))
    p.add_argument("--p-hi", type=float, default=0.5)
    p.add_argument("--period-lo", type=float, default=1)
    p.add_argument("--period-hi", type=float, default=100)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _write(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_generate(args) -> int:
    p = replace(_gen_params(args), total_util=args.util, extended=args.extended)
    _write(generate(p, args.index).to_json(indent=1) + "\n", args.out)
    return 0


def cmd_analyze(args) -> int:
    ts = TaskSet.from_json(_read(args.taskset))
    if args.test in SS_ONLY_TESTS and ts.pibs:
        ts = pibs_to_ss(ts)
    if args.priority == "audsley":
        assigned = audsley_assign(ts, args.test)
        if assigned is None:
            _write(json.dumps({"test": args.test, "schedulable": False,
                               "priority": "audsley"}, indent=1) + "\n", args.out)
            return 0
        ts = assigned
    else:
        ts = ensure_priorities(ts)
    verdict = get_test(args.test)(ts).to_dict()
    verdict["priorities"] = {s.id: s.priority for s in ts.servers}
    _write(json.dumps(verdict, indent=1, default=str) + "\n", args.out)
    return 0


def _emit_trace(trace, fmt: str, out) -> None:
    _write(trace.to_csv() if fmt == "csv" else trace.to_ndjson(), out)


def cmd_simulate(args) -> int:
    ts = TaskSet.from_json(_read(args.taskset))
    wl = Workload.from_json(_read(args.workload))
    horizon = args.horizon if args.horizon is not None else wl.horizon
    _emit_trace(run(ts, wl, horizon), args.format, args.out)
    return 0


def cmd_replay(args) -> int:
    _emit_trace(replay(args.name), args.format, args.out)
    return 0


def cmd_sweep(args) -> int:
    params = _gen_params(args)
    res = harness.sweep(args.tests, _grid(args.utils), args.n_sets, params,
                        args.priority, args.workers)
    _write(res.to_csv(), args.out)
    bad = res.dominance_violations()
    mono = res.monotonicity_violations()
    if bad and args.dump_dir:
        harness.dump_counterexamples(res, bad, params, args.dump_dir)
    for sup, sub, u, i in bad:
        print(f"dominance violated: {sub} accepts set {i} at u={float(u):.2f} "
              f"but {sup} rejects it", file=sys.stderr)
    for t, u in mono:
        print(f"acceptance of {t} rises at u={float(u):.2f}", file=sys.stderr)
    return 1 if bad or mono else 0


def cmd_weighted(args) -> int:
    values = args.values.split(",")
    rows = harness.weighted_sweep(args.axis, values, args.tests, _grid(args.utils),
                                  args.n_sets, _gen_params(args), args.priority, args.workers)
    lines = ["test,param,W"] + [f"{t},{v},{w:.4f}" for t, v, w in rows]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ioamc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate one task set as JSON")
    _add_gen_flags(g, seed_required=False)
    g.add_argument("--util", type=_frac, default=Fraction(1, 2))
    g.add_argument("--index", type=int, default=0)
    g.add_argument("--extended", action="store_true",
                   help="give LO servers and LO PIBS a HI-mode allowance")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="run one schedulability test")
    a.add_argument("taskset")
    a.add_argument("--test", default="IO-AMC-rtb", choices=sorted(TESTS))
    a.add_argument("--priority", choices=("given", "audsley"), default="given",
                   help="given: use the set's priorities (rate monotonic if absent)")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="simulate a task set under a workload")
    s.add_argument("taskset")
    s.add_argument("workload")
    s.add_argument("--horizon", type=int)
    s.add_argument("--format", choices=("ndjson", "csv"), default="ndjson")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("replay-fig", help="replay a named worked example")
    r.add_argument("name", choices=sorted(SCENARIOS))
    r.add_argument("--format", choices=("ndjson", "csv"), default="ndjson")
    r.add_argument("--out")
    r.set_defaults(func=cmd_replay)

    for name, func, helptext in (("sweep", cmd_sweep, "acceptance ratio per utilization"),
                                 ("weighted", cmd_weighted, "weighted schedulability")):
        w = sub.add_parser(name, help=helptext)
        _add_gen_flags(w, seed_required=True)
        w.add_argument("--tests", nargs="+", default=list(harness.DEFAULT_TESTS),
                       choices=sorted(TESTS))
        w.add_argument("--utils", default="0.20:0.95:0.05")
        w.add_argument("--n-sets", type=int, default=500 if name == "sweep" else 100)
        w.add_argument("--priority", choices=("rm", "audsley"), default="rm")
        w.add_argument("--workers", type=int, default=1)
        w.add_argument("--out")
        if name == "sweep":
            w.add_argument("--dump-dir", help="write dominance counterexamples here")
        else:
            w.add_argument("--axis", required=True, choices=sorted(harness.AXES))
            w.add_argument("--values", required=True, help="comma-separated parameter values")
        w.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
