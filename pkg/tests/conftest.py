import math
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ioamc.model import HI, LO, Pibs, SporadicServer, TaskSet
from ioamc.simulator import JobSpec, SimConfig, Workload, run

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def periodic_oracle(servers, horizon_periods=2):
    """Worst simulated response per server under synchronous periodic release.

    Returns a dict id -> response, or None for a server that missed a deadline.
    """
    ts = TaskSet(servers)
    H = math.lcm(*(s.period for s in servers))
    wl = Workload(tuple(JobSpec(s.id, s.capacity_lo) for s in servers),
                  config=SimConfig(blocking=False))
    tr = run(ts, wl, horizon_periods * H)
    out = {}
    for s in servers:
        if tr.misses([s.id]):
            out[s.id] = None
        else:
            out[s.id] = tr.worst_response(s.id, released_before=H)
    return out


@st.composite
def ss_sets(draw, n_max=4, periods=(4, 5, 6, 8, 10, 12, 16, 20)):
    """Small SS-only sets with implicit deadlines, optionally mixed criticality."""
    n = draw(st.integers(1, n_max))
    servers = []
    for k in range(n):
        T = draw(st.sampled_from(periods))
        c = draw(st.integers(1, max(1, T // 2)))
        if draw(st.booleans()):
            servers.append(SporadicServer(f"s{k}", T, c, draw(st.integers(c, T)), HI))
        else:
            servers.append(SporadicServer(f"s{k}", T, c, None, LO))
    return servers


@st.composite
def mixed_sets(draw, n_max=4, n_pibs=2):
    """SS+PIBS sets with every PIBS bound to a server of its criticality."""
    servers = draw(ss_sets(n_max))
    pibs, bindings = [], {}
    for q in range(draw(st.integers(0, n_pibs))):
        host = draw(st.sampled_from(servers))
        u_lo = Fraction(draw(st.integers(1, 4)), draw(st.sampled_from((8, 10, 16, 20))))
        if host.crit == HI:
            u_hi = min(Fraction(1), u_lo * draw(st.sampled_from((1, 2))))
        else:
            u_hi = None
        pibs.append(Pibs(f"p{q}", u_lo, u_hi, host.crit))
        bindings[f"p{q}"] = host.id
    return TaskSet(servers, pibs, bindings)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=str):
        terminalreporter.write_line(mod.RESULTS[key])
