"""Response-time analysis for systems of Sporadic Servers, with and without PIBS."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from ._kernel import Prepared, iterate
from .model import TaskSet, ceil_div, ensure_priorities


@dataclass
class RtaResult:
    """Response times of one analysis run.

    ``pibs_response`` maps ``(pibs_id, server_id)`` to the PIBS response time
    when it runs on behalf of that server. A value of None means the
    iteration passed the deadline.
    """

    response_time: dict = field(default_factory=dict)
    pibs_response: dict = field(default_factory=dict)
    test_name: str = "SS-rta"

    @property
    def schedulable(self) -> bool:
        return all(r is not None for r in self.response_time.values()) and all(
            r is not None for r in self.pibs_response.values()
        )

    def server_ok(self, sid: str) -> bool:
        if self.response_time.get(sid, 0) is None:
            return False
        return all(r is not None for (p, s), r in self.pibs_response.items() if s == sid)

    def to_dict(self) -> dict:
        return {
            "test": self.test_name,
            "schedulable": self.schedulable,
            "servers": self.response_time,
            "pibs": [
                {"pibs": p, "server": s, "R": r} for (p, s), r in sorted(self.pibs_response.items())
            ],
        }


def fixed_point(const_term: int, recurrence: Callable[[int], int], deadline: int) -> Optional[int]:
    """Iterate ``R <- recurrence(R)`` from ``const_term`` until it stabilizes.

    Returns None as soon as an iterate exceeds ``deadline``.
    """
    r = const_term
    if r > deadline:
        return None
    while True:
        nxt = recurrence(r)
        if nxt > deadline:
            return None
        if nxt == r:
            return r
        r = nxt


def pibs_interference(t: int, period: int, util: Fraction) -> Fraction:
    """Exact upper bound on PIBS execution in a window of length ``t``.

    ``(1 + ceil(t / period) - U) * period * U`` for a PIBS of utilization U
    running on behalf of a server with the given period.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    util = Fraction(util)
    return (1 + ceil_div(max(t, 0), period) - util) * period * util


def ss_rta(ts: TaskSet, subjects: Optional[Iterable[str]] = None) -> RtaResult:
    """Classic fixed-priority RTA treating each server as a periodic task.

    PIBS in ``ts`` are ignored.
    """
    ts = ensure_priorities(ts)
    prep = Prepared(ts.without_pibs())
    res = RtaResult(test_name="SS-rta")
    wanted = None if subjects is None else set(subjects)
    for k, sid in enumerate(prep.ids):
        if wanted is not None and sid not in wanted:
            continue
        res.response_time[sid] = _server_lo(prep, k, use_pibs=False)
    return res


def ss_pibs_rta(ts: TaskSet, subjects: Optional[Iterable[str]] = None) -> RtaResult:
    """RTA for a mixed system of Sporadic Servers and PIBS.

    Each server accounts for every PIBS at the worst server in hip(i) it may
    be running for. Each PIBS is checked against every server it can be
    assigned to (its binding if present, all servers otherwise).
    """
    ts = ensure_priorities(ts)
    prep = Prepared(ts)
    res = RtaResult(test_name="SS+PIBS-rta")
    wanted = None if subjects is None else set(subjects)
    for k, sid in enumerate(prep.ids):
        if wanted is not None and sid not in wanted:
            continue
        res.response_time[sid] = _server_lo(prep, k, use_pibs=True)
    for p, pid in enumerate(prep.pids):
        for s in prep.candidates(p, wanted):
            res.pibs_response[(pid, prep.ids[s])] = _pibs_lo(prep, p, s, prep.u_lo[p])
    return res


# Shared LO-mode (non mixed-criticality) equations, also used by the AMC tests.


def _server_lo(prep: Prepared, k: int, use_pibs: bool = True, seed: Optional[int] = None) -> Optional[int]:
    S = prep.S
    T, C = prep.period, prep.c_lo
    hp = list(prep.hp(k))
    periods = prep.periods(k)
    us = [u for u in prep.u_lo if u] if use_pibs else []
    c0 = C[k] if seed is None else seed

    def total(r):
        acc = c0 * S
        for j in hp:
            acc += ceil_div(r, T[j]) * C[j] * S
        for u in us:
            acc += prep.interference(r, periods, u)
        return acc

    return iterate(total, c0, S, T[k])


def _pibs_lo(prep: Prepared, p: int, s: int, u_first: int) -> Optional[int]:
    S = prep.S
    T, C = prep.period, prep.c_lo
    hip = list(range(s + 1))
    periods = prep.periods(s)
    others = [u for q, u in enumerate(prep.u_lo) if q != p and u]
    first = prep.full_window(u_first, T[s])

    def total(r):
        acc = first
        for j in hip:
            acc += ceil_div(r, T[j]) * C[j] * S
        for u in others:
            acc += prep.interference(r, periods, u)
        return acc

    return iterate(total, ceil_div(first, S), S, T[s])

