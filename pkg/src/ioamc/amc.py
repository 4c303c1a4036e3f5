"""Adaptive Mixed-Criticality tests for Sporadic Servers with and without PIBS.

Each test returns an :class:`AmcVerdict` holding, per server and per
(PIBS, server) pair, the steady-state response times and the mode-change
bound. The mode-change bounds follow the AMC-rtb construction: R^{LO*} is
solved first and held fixed while R* is iterated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from . import rta
from ._kernel import Prepared, iterate
from .model import HI, LO, CritLevel, Pibs, TaskSet, ceil_div, ensure_priorities


class Model(enum.Enum):
    SS_ONLY = "SS_ONLY"
    SS_PIBS = "SS_PIBS"


@dataclass(frozen=True)
class AmcOptions:
    lo_tasks_survive: bool = False
    model: Model = Model.SS_PIBS


CLASSIC = AmcOptions()
EXTENDED = AmcOptions(lo_tasks_survive=True)


@dataclass
class Response:
    r_lo: Optional[int] = None
    r_hi: Optional[int] = None
    r_star: Optional[int] = None
    r_lo_star: Optional[int] = None

    def to_dict(self) -> dict:
        return {"R_lo": self.r_lo, "R_hi": self.r_hi, "R_star": self.r_star, "R_lo_star": self.r_lo_star}


@dataclass
class AmcVerdict:
    """Outcome of one mixed-criticality test.

    ``misses`` lists every applicable quantity that failed to converge below
    its deadline as ``(quantity, subject_id, server_id)``; the set is
    schedulable exactly when the list is empty.
    """

    test_name: str
    tasks: dict = field(default_factory=dict)
    pibs: dict = field(default_factory=dict)
    misses: list = field(default_factory=list)

    @property
    def schedulable(self) -> bool:
        return not self.misses

    def server_ok(self, sid: str) -> bool:
        return not any(m[2] == sid for m in self.misses)

    def _record(self, quantity: str, value: Optional[int], subject: str, server: str) -> Optional[int]:
        if value is None:
            self.misses.append((quantity, subject, server))
        return value

    def to_dict(self) -> dict:
        return {
            "test": self.test_name,
            "schedulable": self.schedulable,
            "servers": {sid: r.to_dict() for sid, r in self.tasks.items()},
            "pibs": [
                {"pibs": p, "server": s, **r.to_dict()} for (p, s), r in sorted(self.pibs.items())
            ],
            "misses": [list(m) for m in self.misses],
        }


def crit_interference(t: int, period: int, pibs: Pibs, level: CritLevel) -> Fraction:
    """PIBS interference bound using the PIBS utilization of ``level``."""
    return rta.pibs_interference(t, period, pibs.util(level))


# Building blocks. All take a Prepared view and a priority rank.


def _server_hi(prep: Prepared, k: int) -> Optional[int]:
    S, T, C = prep.S, prep.period, prep.c_hi
    hpH = prep.hpH(k)
    periods = prep.periods(k, high_only=True)
    us = [u for u in prep.u_hi if u]
    c0 = C[k]

    def total(r):
        acc = c0 * S
        for j in hpH:
            acc += ceil_div(r, T[j]) * C[j] * S
        for u in us:
            acc += prep.interference(r, periods, u)
        return acc

    return iterate(total, c0, S, T[k])


def _pibs_hi(prep: Prepared, p: int, s: int) -> Optional[int]:
    S, T, C = prep.S, prep.period, prep.c_hi
    hipH = prep.hipH(s)
    periods = prep.periods(s, high_only=True)
    others = [u for q, u in enumerate(prep.u_hi) if q != p and u]
    first = prep.full_window(prep.u_hi[p], T[s])

    def total(r):
        acc = first
        for j in hipH:
            acc += ceil_div(r, T[j]) * C[j] * S
        for u in others:
            acc += prep.interference(r, periods, u)
        return acc

    return iterate(total, ceil_div(first, S), S, T[s])


def _server_lo_star(prep: Prepared, k: int, use_pibs: bool) -> Optional[int]:
    seed = prep.c_lo[k]
    if prep.crit[k] == LO or prep.has_c_hi[k]:
        seed = min(prep.c_lo[k], prep.c_hi[k])
    return rta._server_lo(prep, k, use_pibs=use_pibs, seed=seed)


def _server_star(prep: Prepared, k: int, lostar: int, extended: bool) -> Optional[int]:
    S, T = prep.S, prep.period
    c_lo, c_hi = prep.c_lo, prep.c_hi
    hpH, hpL = prep.hpH(k), prep.hpL(k)
    hip = prep.periods(k)
    after = hip if extended else prep.periods(k, high_only=True)
    psH = [prep.u_hi[q] for q in range(len(prep.pids)) if prep.pcrit[q] == HI and prep.u_hi[q]]
    psL = [q for q in range(len(prep.pids)) if prep.pcrit[q] == LO]
    psL_after = [prep.u_hi[q] for q in psL if prep.u_hi[q]]

    const = 0
    for j in hpL:
        const += ceil_div(lostar, T[j]) * c_lo[j] * S
    for q in psL:
        const += prep.interference(lostar, hip, prep.u_lo[q])
    lo_counts = {j: ceil_div(lostar, T[j]) for j in hpL}
    c0 = c_hi[k]

    def total(r):
        acc = c0 * S + const
        for j in hpH:
            acc += ceil_div(r, T[j]) * c_hi[j] * S
        if extended:
            for j in hpL:
                extra = ceil_div(r, T[j]) - lo_counts[j]
                if extra > 0:
                    acc += extra * c_hi[j] * S
        for u in psH:
            acc += prep.interference(r, hip, u)
        for u in psL_after:
            acc += prep.interference(r - lostar, after, u)
        return acc

    return iterate(total, c0, S, T[k])


def _pibs_lo_star(prep: Prepared, p: int, s: int) -> Optional[int]:
    u = min(prep.u_lo[p], prep.u_hi[p])
    return rta._pibs_lo(prep, p, s, u)


def _pibs_star(prep: Prepared, p: int, s: int, lostar: int, extended: bool) -> Optional[int]:
    S, T = prep.S, prep.period
    c_lo, c_hi = prep.c_lo, prep.c_hi
    hipH, hipL, hpL = prep.hipH(s), prep.hipL(s), prep.hpL(s)
    hip = prep.periods(s)
    after = hip if extended else prep.periods(s, high_only=True)
    n = len(prep.pids)
    psH = [prep.u_hi[q] for q in range(n) if q != p and prep.pcrit[q] == HI and prep.u_hi[q]]
    psL = [q for q in range(n) if q != p and prep.pcrit[q] == LO]
    psL_after = [prep.u_hi[q] for q in psL if prep.u_hi[q]]
    first = prep.full_window(prep.u_hi[p], T[s])

    const = first
    for j in hipL:
        const += ceil_div(lostar, T[j]) * c_lo[j] * S
    for q in psL:
        const += prep.interference(lostar, hip, prep.u_lo[q])
    lo_counts = {j: ceil_div(lostar, T[j]) for j in hpL}

    def total(r):
        acc = const
        for j in hipH:
            acc += ceil_div(r, T[j]) * c_hi[j] * S
        if extended:
            for j in hpL:
                extra = ceil_div(r, T[j]) - lo_counts[j]
                if extra > 0:
                    acc += extra * c_hi[j] * S
        for u in psH:
            acc += prep.interference(r, hip, u)
        for u in psL_after:
            acc += prep.interference(r - lostar, after, u)
        return acc

    return iterate(total, ceil_div(first, S), S, T[s])


def _hi_candidates(prep: Prepared, p: int, wanted, extended: bool) -> list:
    """Servers a PIBS can serve after the mode change."""
    cands = prep.candidates(p, wanted)
    bound = prep.pids[p] in prep.ts.bindings
    if extended and bound:
        return cands
    if extended:
        return [s for s in cands if prep.crit[s] == HI or prep.c_hi[s] > 0]
    return [s for s in cands if prep.crit[s] == HI]


# Public tests.


def _prepare(ts: TaskSet, opts: AmcOptions, name: str):
    ts = ensure_priorities(ts)
    if opts.model is Model.SS_ONLY and ts.pibs:
        raise ValueError(f"{name}: SS_ONLY model requires a task set without PIBS")
    return ts, Prepared(ts)


def _steady(prep: Prepared, verdict: AmcVerdict, mode: CritLevel, wanted) -> None:
    use_pibs = bool(prep.pids)
    for k, sid in enumerate(prep.ids):
        if wanted is not None and sid not in wanted:
            continue
        if mode == LO:
            resp = verdict.tasks.setdefault(sid, Response())
            resp.r_lo = verdict._record("R_lo", rta._server_lo(prep, k, use_pibs=use_pibs), sid, sid)
        elif prep.crit[k] == HI:
            resp = verdict.tasks.setdefault(sid, Response())
            resp.r_hi = verdict._record("R_hi", _server_hi(prep, k), sid, sid)
    for p, pid in enumerate(prep.pids):
        if mode == LO:
            for s in prep.candidates(p, wanted):
                sid = prep.ids[s]
                resp = verdict.pibs.setdefault((pid, sid), Response())
                resp.r_lo = verdict._record("R_lo", rta._pibs_lo(prep, p, s, prep.u_lo[p]), pid, sid)
        elif prep.u_hi[p]:
            for s in _hi_candidates(prep, p, wanted, extended=False):
                sid = prep.ids[s]
                resp = verdict.pibs.setdefault((pid, sid), Response())
                resp.r_hi = verdict._record("R_hi", _pibs_hi(prep, p, s), pid, sid)


def _mode_change(prep: Prepared, verdict: AmcVerdict, extended: bool, wanted) -> None:
    use_pibs = bool(prep.pids)
    for k, sid in enumerate(prep.ids):
        if wanted is not None and sid not in wanted:
            continue
        if prep.crit[k] == LO and not (extended and prep.c_hi[k] > 0):
            continue
        resp = verdict.tasks.setdefault(sid, Response())
        lostar = verdict._record("R_lo_star", _server_lo_star(prep, k, use_pibs), sid, sid)
        resp.r_lo_star = lostar
        if lostar is None:
            continue
        resp.r_star = verdict._record("R_star", _server_star(prep, k, lostar, extended), sid, sid)
    for p, pid in enumerate(prep.pids):
        if not prep.u_hi[p]:
            continue
        for s in _hi_candidates(prep, p, wanted, extended):
            sid = prep.ids[s]
            resp = verdict.pibs.setdefault((pid, sid), Response())
            lostar = verdict._record("R_lo_star", _pibs_lo_star(prep, p, s), pid, sid)
            resp.r_lo_star = lostar
            if lostar is None:
                continue
            resp.r_star = verdict._record("R_star", _pibs_star(prep, p, s, lostar, extended), pid, sid)


def amc_steady_lo(ts: TaskSet, subjects: Optional[Iterable[str]] = None) -> AmcVerdict:
    ts, prep = _prepare(ts, AmcOptions(model=Model.SS_ONLY), "amc_steady_lo")
    verdict = AmcVerdict("AMC-steady-LO")
    _steady(prep, verdict, LO, _wanted(subjects))
    return verdict


def amc_steady_hi(ts: TaskSet, subjects: Optional[Iterable[str]] = None) -> AmcVerdict:
    ts, prep = _prepare(ts, AmcOptions(model=Model.SS_ONLY), "amc_steady_hi")
    verdict = AmcVerdict("AMC-steady-HI")
    _steady(prep, verdict, HI, _wanted(subjects))
    return verdict


def amc_ub(ts: TaskSet, subjects: Optional[Iterable[str]] = None) -> AmcVerdict:
    """Both AMC steady states: a necessary condition for any AMC test."""
    ts, prep = _prepare(ts, AmcOptions(model=Model.SS_ONLY), "amc_ub")
    verdict = AmcVerdict("AMC-UB")
    wanted = _wanted(subjects)
    _steady(prep, verdict, LO, wanted)
    _steady(prep, verdict, HI, wanted)
    return verdict


def amc_rtb(ts: TaskSet, opts: AmcOptions = AmcOptions(model=Model.SS_ONLY),
            subjects: Optional[Iterable[str]] = None) -> AmcVerdict:
    """AMC-rtb for Sporadic Servers only; LO survival per ``opts``.

    The verdict also carries both steady states, so acceptance here implies
    acceptance by :func:`amc_ub`.
    """
    opts = AmcOptions(opts.lo_tasks_survive, Model.SS_ONLY)
    ts, prep = _prepare(ts, opts, "amc_rtb")
    verdict = AmcVerdict("AMC-rtb-ext" if opts.lo_tasks_survive else "AMC-rtb")
    wanted = _wanted(subjects)
    _steady(prep, verdict, LO, wanted)
    _steady(prep, verdict, HI, wanted)
    _mode_change(prep, verdict, opts.lo_tasks_survive, wanted)
    return verdict


def io_amc_steady(ts: TaskSet, mode: CritLevel, subjects: Optional[Iterable[str]] = None) -> AmcVerdict:
    ts = ensure_priorities(ts)
    prep = Prepared(ts)
    verdict = AmcVerdict(f"IO-AMC-steady-{CritLevel(mode).name}")
    _steady(prep, verdict, CritLevel(mode), _wanted(subjects))
    return verdict


def io_amc_ub(ts: TaskSet, subjects: Optional[Iterable[str]] = None) -> AmcVerdict:
    ts = ensure_priorities(ts)
    prep = Prepared(ts)
    verdict = AmcVerdict("IO-AMC-UB")
    wanted = _wanted(subjects)
    _steady(prep, verdict, LO, wanted)
    _steady(prep, verdict, HI, wanted)
    return verdict


def io_amc_rtb(ts: TaskSet, opts: AmcOptions = CLASSIC,
               subjects: Optional[Iterable[str]] = None) -> AmcVerdict:
    """IO-AMC-rtb: mode-change bound for servers and PIBS, plus both steady states."""
    ts = ensure_priorities(ts)
    prep = Prepared(ts)
    verdict = AmcVerdict("IO-AMC-rtb-ext" if opts.lo_tasks_survive else "IO-AMC-rtb")
    wanted = _wanted(subjects)
    _steady(prep, verdict, LO, wanted)
    _steady(prep, verdict, HI, wanted)
    _mode_change(prep, verdict, opts.lo_tasks_survive, wanted)
    return verdict


def _wanted(subjects):
    return None if subjects is None else set(subjects)


# Test registry and priority assignment.

Test = Callable[..., Union[AmcVerdict, "rta.RtaResult"]]

TESTS: dict = {
    "SS-rta": rta.ss_rta,
    "SS+PIBS-rta": rta.ss_pibs_rta,
    "AMC-rtb": lambda ts, subjects=None: amc_rtb(ts, AmcOptions(model=Model.SS_ONLY), subjects),
    "AMC-rtb-ext": lambda ts, subjects=None: amc_rtb(
        ts, AmcOptions(lo_tasks_survive=True, model=Model.SS_ONLY), subjects),
    "AMC-UB": amc_ub,
    "IO-AMC-rtb": lambda ts, subjects=None: io_amc_rtb(ts, CLASSIC, subjects),
    "IO-AMC-rtb-ext": lambda ts, subjects=None: io_amc_rtb(ts, EXTENDED, subjects),
    "IO-AMC-UB": io_amc_ub,
}

# Tests that run on the SS-only conversion of a task set.
SS_ONLY_TESTS = frozenset({"SS-rta", "AMC-rtb", "AMC-rtb-ext", "AMC-UB"})


def get_test(test: Union[str, Test]) -> Test:
    if callable(test):
        return test
    try:
        return TESTS[test]
    except KeyError:
        raise ValueError(f"unknown test {test!r}; choose from {sorted(TESTS)}") from None


def audsley_assign(ts: TaskSet, test: Union[str, Test]) -> Optional[TaskSet]:
    """Audsley's lowest-priority-first assignment under ``test``.

    At each level the candidates are tried in id order; the first one whose
    own entries pass with every unassigned server above it takes the level.
    Returns None when some level has no feasible candidate.
    """
    fn = get_test(test)
    ids = sorted(s.id for s in ts.servers)
    unassigned = list(ids)
    fixed: dict = {}
    for level in range(len(ids) - 1, -1, -1):
        for cand in unassigned:
            others = [i for i in unassigned if i != cand]
            prios = dict(fixed)
            prios.update({i: n for n, i in enumerate(others)})
            prios[cand] = level
            trial = ts.with_priorities(prios)
            if fn(trial, subjects=[cand]).server_ok(cand):
                fixed[cand] = level
                unassigned.remove(cand)
                break
        else:
            return None
    return ts.with_priorities(fixed)
