"""Schedulability sweeps, weighted schedulability and paired dominance checks."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .amc import SS_ONLY_TESTS, TESTS, audsley_assign, get_test
from .model import TaskSet, ensure_priorities
from .taskgen import GenParams, classic_view, generate, pibs_to_ss

DEFAULT_TESTS = ("SS-rta", "SS+PIBS-rta", "AMC-rtb", "IO-AMC-rtb", "AMC-UB", "IO-AMC-UB")
DEFAULT_GRID = tuple(Fraction(k, 100) for k in range(20, 96, 5))

# (superset, subset): every set accepted by the second must pass the first
INVARIANT_PAIRS = (
    ("AMC-UB", "AMC-rtb"),
    ("IO-AMC-UB", "IO-AMC-rtb"),
    ("SS-rta", "SS+PIBS-rta"),
    ("AMC-rtb", "IO-AMC-rtb"),
)


def input_for(ts: TaskSet, test: str) -> TaskSet:
    """The task set a named test sees, given a set generated with LO survival.

    Tests without the ``-ext`` suffix see the classic view; the SS-only tests
    see the PIBS-to-server conversion.
    """
    src = ts if test.endswith("-ext") else classic_view(ts)
    if test in SS_ONLY_TESTS:
        src = pibs_to_ss(src)
    return src


def accepts(ts: TaskSet, test: str, priority: str = "rm") -> bool:
    src = input_for(ts, test)
    if priority == "audsley":
        return audsley_assign(src, test) is not None
    return get_test(test)(ensure_priorities(src)).schedulable


def _evaluate(args) -> tuple:
    params, index, tests, priority = args
    ts = generate(params, index)
    return tuple(accepts(ts, t, priority) for t in tests)


@dataclass
class SweepResult:
    """Per-set verdicts of a sweep.

    ``verdicts[test][k][i]`` is the verdict for set ``i`` at grid point ``k``;
    set ``i`` is generated from the same random stream at every point.
    """

    tests: tuple
    grid: tuple
    n_sets: int
    verdicts: dict = field(default_factory=dict)
    param: Optional[str] = None
    param_value: object = None

    def accepted(self, test: str, k: int) -> int:
        return sum(self.verdicts[test][k])

    def ratio(self, test: str, k: int) -> float:
        return self.accepted(test, k) / self.n_sets if self.n_sets else 0.0

    def rows(self) -> list:
        out = []
        for t in self.tests:
            for k, u in enumerate(self.grid):
                a = self.accepted(t, k)
                out.append({"test": t, "util": float(u), "accepted": a,
                            "total": self.n_sets, "ratio": a / self.n_sets if self.n_sets else 0.0})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["test", "util", "accepted", "total", "ratio"], lineterminator="\n")
        w.writeheader()
        for r in self.rows():
            w.writerow({**r, "util": f"{r['util']:.2f}", "ratio": f"{r['ratio']:.4f}"})
        return buf.getvalue()

    def dominance_violations(self, pairs: Iterable = INVARIANT_PAIRS) -> list:
        """``(superset, subset, util, set_index)`` for every set breaking a pair."""
        bad = []
        for sup, sub in pairs:
            if sup not in self.verdicts or sub not in self.verdicts:
                continue
            for k, u in enumerate(self.grid):
                for i, (a, b) in enumerate(zip(self.verdicts[sup][k], self.verdicts[sub][k])):
                    if b and not a:
                        bad.append((sup, sub, u, i))
        return bad

    def monotonicity_violations(self) -> list:
        """``(test, util)`` points where acceptance rose with utilization."""
        bad = []
        for t in self.tests:
            for k in range(1, len(self.grid)):
                if self.accepted(t, k) > self.accepted(t, k - 1):
                    bad.append((t, self.grid[k]))
        return bad


def sweep(tests: Sequence[str] = DEFAULT_TESTS, grid: Sequence = DEFAULT_GRID,
          n_sets: int = 500, params: Optional[GenParams] = None, priority: str = "rm",
          workers: int = 1) -> SweepResult:
    """Evaluate ``n_sets`` generated sets at each utilization point under every test.

    Sets are generated with LO survival allowances so that classic and
    extended tests judge the same draw.
    """
    for t in tests:
        get_test(t)
    base = replace(params or GenParams(), extended=True)
    tests = tuple(tests)
    grid = tuple(Fraction(u) for u in grid)
    res = SweepResult(tests, grid, n_sets, {t: [] for t in tests})
    for u in grid:
        p = replace(base, total_util=u)
        jobs = [(p, i, tests, priority) for i in range(n_sets)]
        if workers > 1:
            with ProcessPoolExecutor(workers) as ex:
                out = list(ex.map(_evaluate, jobs, chunksize=16))
        else:
            out = [_evaluate(j) for j in jobs]
        for j, t in enumerate(tests):
            res.verdicts[t].append([o[j] for o in out])
    return res


def weighted_schedulability(result: SweepResult) -> dict:
    """W for each test: utilization-weighted fraction of accepted sets."""
    out = {}
    for t in result.tests:
        num = den = Fraction(0)
        for k, u in enumerate(result.grid):
            acc = result.accepted(t, k)
            num += u * acc
            den += u * result.n_sets
        out[t] = float(num / den) if den else 0.0
    return out


def weighted_formula(utils: Sequence, verdicts: Sequence[bool]) -> Fraction:
    """W = sum(u * S) / sum(u) over individual sets."""
    den = sum((Fraction(u) for u in utils), Fraction(0))
    num = sum((Fraction(u) for u, s in zip(utils, verdicts) if s), Fraction(0))
    return num / den if den else Fraction(0)


AXES = {
    "p_hi": lambda p, v: replace(p, p_hi=float(v)),
    "cf": lambda p, v: replace(p, crit_factor=Fraction(v)),
    "n": lambda p, v: replace(p, n_main=int(v)),
}


def weighted_sweep(axis: str, values: Sequence, tests: Sequence[str] = DEFAULT_TESTS,
                   grid: Sequence = DEFAULT_GRID, n_sets: int = 100,
                   params: Optional[GenParams] = None, priority: str = "rm",
                   workers: int = 1) -> list:
    """Rows ``(test, value, W)`` for each value of one generation parameter."""
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}; choose from {sorted(AXES)}")
    rows = []
    for v in values:
        p = AXES[axis](params or GenParams(), v)
        res = sweep(tests, grid, n_sets, p, priority, workers)
        for t, w in weighted_schedulability(res).items():
            rows.append((t, v, w))
    return rows


def dump_counterexamples(result: SweepResult, violations: Sequence, params: GenParams,
                         directory: str) -> list:
    """Write each offending set as JSON; returns the file paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    base = replace(params, extended=True)
    for sup, sub, u, i in violations:
        ts = generate(replace(base, total_util=u), i)
        name = f"{sup}_vs_{sub}_u{float(u):.2f}_i{i}.json".replace("+", "p")
        path = os.path.join(directory, name)
        with open(path, "w") as fh:
            json.dump({"superset": sup, "subset": sub, "util": str(u), "index": i,
                       "seed": params.seed, "taskset": ts.to_dict()}, fh, indent=1)
        paths.append(path)
    return paths


__all__ = [
    "AXES", "DEFAULT_GRID", "DEFAULT_TESTS", "INVARIANT_PAIRS", "SweepResult", "TESTS",
    "accepts", "dump_counterexamples", "sweep", "input_for", "weighted_formula",
    "weighted_schedulability", "weighted_sweep",
]
