"""Named scenarios that replay the two worked scheduling examples."""

from __future__ import annotations

from fractions import Fraction

from ..model import Pibs, SporadicServer, TaskSet
from .engine import run
from .replenish import MergePolicy
from .trace import SimTrace
from .workload import InterruptStream, JobSpec, SimConfig, Workload

REPLAY_HORIZON = 48


def gantt_ss_only(policy: MergePolicy = MergePolicy.MERGE_NEXT):
    """tau1 (C=8, T=16) blocks on a read whose four bottom halves run on tau2 (C=4, T=16)."""
    ts = TaskSet([
        SporadicServer("tau1", 16, 8, priority=0),
        SporadicServer("tau2", 16, 4, priority=1),
    ])
    io = InterruptStream(handler="tau2", K=4, B_lo=1, F=1, I=2)
    wl = Workload(jobs=(JobSpec("tau1", 8, io=io),), horizon=REPLAY_HORIZON,
                  config=SimConfig(list_len=3, merge_policy=policy))
    return ts, wl


def gantt_ss_pibs():
    """Same tau1, but its bottom halves run on a PIBS with U = 1/4."""
    ts = TaskSet([SporadicServer("tau1", 16, 8, priority=0)],
                 [Pibs("pibs", Fraction(1, 4))], {"pibs": "tau1"})
    io = InterruptStream(handler="pibs", K=4, B_lo=1, F=1, I=2)
    wl = Workload(jobs=(JobSpec("tau1", 8, io=io),), horizon=REPLAY_HORIZON,
                  config=SimConfig(list_len=3))
    return ts, wl


SCENARIOS = {
    "gantt-ss-only": gantt_ss_only,
    "gantt-ss-pibs": gantt_ss_pibs,
}


def replay(name: str) -> SimTrace:
    try:
        ts, wl = SCENARIOS[name]()
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return run(ts, wl)
