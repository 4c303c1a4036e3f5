"""Cross-checks between the analyses and the simulator.

A set accepted by a test is simulated with an adversarial workload: every job
asks for its full budget, all servers release together at t=0, every bound
PIBS receives back-to-back bottom halves that fill its budget, and a mode
change is provoked at a chosen instant. Any deadline miss of a subject the
test vouches for is a counterexample to the analysis.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .model import HI, TaskSet, ensure_priorities
from .simulator import InterruptStream, JobSpec, SimConfig, Workload, run


def maximal_workload(ts: TaskSet, change_at: Optional[int], forced: bool = False,
                     extended: bool = False, bursts: int = 3) -> Workload:
    """Full-budget jobs plus interrupt streams that keep every bound PIBS busy.

    Each bottom half is exactly one PIBS budget long in its mode, and a job
    raises ``bursts`` of them as soon as it completes. HI jobs overrun to
    C(HI) from ``change_at`` on. With ``forced`` the change is also imposed
    at that instant.
    """
    streams: dict = {}
    for p in ts.pibs:
        sid = ts.bindings.get(p.id)
        if sid is None:
            continue
        T = ts.server(sid).period
        b_lo = int(p.util_lo * T)
        if b_lo < 1:
            continue
        b_hi = max(1, int(p.util(HI) * T)) if p.crit == HI else b_lo
        gap = max(b_lo, b_hi) + 1
        streams.setdefault(sid, []).append(
            InterruptStream(handler=p.id, K=bursts, B_lo=b_lo, B_hi=b_hi, F=0, I=gap))
    jobs = []
    for s in ts.servers:
        if s.capacity_lo < 1:
            continue
        busy_hi = s.capacity_hi if s.crit == HI else s.capacity_lo
        jobs.append(JobSpec(s.id, s.capacity_lo, max(1, busy_hi or 1),
                            io=tuple(streams.get(s.id, ()))))
    cfg = SimConfig(extended=extended, blocking=False, overrun_from=change_at,
                    mode_change_at=change_at if forced else None)
    return Workload(tuple(jobs), (), None, cfg)


@dataclass
class SafetyOutcome:
    horizon: int
    change_at: Optional[int]
    forced: bool
    mode_change: Optional[dict]
    hi_misses: list = field(default_factory=list)
    lo_misses_before_change: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.hi_misses


def check_set(ts: TaskSet, rng: random.Random, extended: bool = False,
              periods: int = 3) -> SafetyOutcome:
    """Simulate one accepted set under a random mode-change instant.

    The horizon covers ``periods`` of the longest server period after the
    latest possible change.
    """
    ts = ensure_priorities(ts)
    tmax = max(s.period for s in ts.servers)
    change_at = rng.randrange(0, tmax + 1)
    forced = rng.random() < 0.5
    wl = maximal_workload(ts, change_at, forced, extended)
    horizon = change_at + periods * tmax
    trace = run(ts, wl, horizon)
    hi_ids = {s.id for s in ts.servers if s.crit == HI}
    mc = trace.mode_change
    t_mc = mc["time"] if mc else horizon + 1
    out = SafetyOutcome(horizon, change_at, forced, mc)
    for e in trace.misses():
        if e.subject in hi_ids:
            out.hi_misses.append(e)
        elif e.time < t_mc:
            out.lo_misses_before_change.append(e)
    return out
