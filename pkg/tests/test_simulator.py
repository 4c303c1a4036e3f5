import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ioamc.model import HI, LO, Pibs, SporadicServer, TaskSet, ceil_frac
from ioamc.simulator import (
    SCENARIOS, Event, InterruptStream, JobSpec, MergePolicy, RawInterrupt, SimConfig,
    SimTrace, Workload, WorkloadError, check_trace, max_window_execution, replay, run,
)
from ioamc.simulator.scenarios import gantt_ss_only


def times(trace, kind, subject=None):
    return [e.time for e in trace.of_kind(kind, subject)]


# Worked examples


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_replay_matches_golden_fixture(name, fixtures_dir):
    golden = (fixtures_dir / f"{name}.ndjson").read_text()
    assert replay(name).to_ndjson() == golden


def test_ss_only_example_narrative():
    tr = replay("gantt-ss-only")
    assert tr.executed("tau1")[0] == (0, 8)
    assert times(tr, "IRQ_TOP") == [9, 11, 13, 15, 35, 37, 39, 41]
    # the third post overflows the 3-item list and is folded into t=25
    merge = tr.of_kind("REPLENISH_MERGE")[0]
    assert (merge.time, merge.detail["at"]) == (14, 25)
    assert times(tr, "BH_END")[3] == 26
    assert tr.of_kind("DISPATCH", "tau1")[1].time == 26
    assert [(e.subject, e.time) for e in tr.misses()][0] == ("tau1", 32)
    assert check_trace(tr) == []


def test_ss_pibs_example_narrative():
    tr = replay("gantt-ss-pibs")
    posts = [e.detail["at"] for e in tr.of_kind("REPLENISH_POST", "pibs")]
    assert posts[:2] == [13, 25]
    assert tr.executed("pibs")[:2] == [(9, 10), (13, 16)]
    assert tr.of_kind("DISPATCH", "tau1")[1].time == 16
    assert tr.misses() == []
    assert check_trace(tr) == []


def test_merge_tail_policy_avoids_the_miss():
    ts, wl = gantt_ss_only(MergePolicy.MERGE_TAIL)
    tr = run(ts, wl)
    assert times(tr, "BH_END")[3] == 16
    assert tr.misses() == []


def test_unknown_scenario():
    with pytest.raises(KeyError):
        replay("nope")


# Trace plumbing


def test_run_is_deterministic():
    assert replay("gantt-ss-pibs").to_ndjson() == replay("gantt-ss-pibs").to_ndjson()


def test_ndjson_round_trip():
    tr = replay("gantt-ss-only")
    assert SimTrace.events_from_ndjson(tr.to_ndjson()) == tr.events


def test_csv_layout():
    lines = replay("gantt-ss-only").to_csv().splitlines()
    assert lines[0] == "time,kind,subject,detail"
    assert lines[1] == "0,RELEASE,tau1,deadline=16;job=0"


def test_empty_workload_gives_empty_trace():
    ts = TaskSet([SporadicServer("a", 10, 2)])
    tr = run(ts, Workload(), 100)
    assert tr.events == [] and tr.segments == []


def test_unknown_event_kind():
    with pytest.raises(ValueError):
        SimTrace().emit(0, "NAP", "x")


def test_check_trace_flags_problems():
    tr = SimTrace()
    tr.events = [Event(5, "DISPATCH", "a"), Event(3, "DISPATCH", "a"),
                 Event(4, "MODE_CHANGE", "a"), Event(6, "MODE_CHANGE", "a")]
    problems = check_trace(tr)
    assert len(problems) == 3


def test_max_window_execution():
    assert max_window_execution([], 5) == 0
    assert max_window_execution([(0, 2), (8, 10)], 10) == 4
    assert max_window_execution([(0, 3), (9, 12)], 10) == 4
    assert max_window_execution([(0, 3), (9, 12)], 12) == 6


def test_segments_join_adjacent_pieces():
    tr = SimTrace()
    tr.add_segment("a", 0, 2)
    tr.add_segment("a", 2, 5)
    tr.add_segment("b", 5, 6)
    tr.add_segment("b", 7, 7)
    assert tr.segments == [("a", 0, 5), ("b", 5, 6)]


# Workload inputs


def test_stream_validation():
    with pytest.raises(WorkloadError):
        InterruptStream("p", 0, 1, 0, 2)
    with pytest.raises(WorkloadError):
        InterruptStream("p", 3, 2, 0, 2)
    assert InterruptStream("p", 1, 5, 0, 0).arrivals(10) == [10]
    assert InterruptStream("p", 3, 1, 1, 2).arrivals(8) == [9, 11, 13]


def test_job_spec_validation():
    with pytest.raises(WorkloadError):
        JobSpec("a", 0)
    with pytest.raises(WorkloadError):
        JobSpec("a", 1, offset=-1)
    one = InterruptStream("p", 1, 1, 0, 2)
    assert JobSpec("a", 1, io=one).io == (one,)
    assert JobSpec("a", 1, io=None).io == ()


def test_workload_validate():
    ts = TaskSet([SporadicServer("a", 10, 2)], [Pibs("p", "1/5")], {"p": "a"})
    with pytest.raises(WorkloadError):
        run(ts, Workload((JobSpec("zz", 1),)), 10)
    with pytest.raises(WorkloadError):
        run(ts, Workload((JobSpec("a", 1), JobSpec("a", 1))), 10)
    with pytest.raises(WorkloadError):
        run(ts, Workload((JobSpec("a", 1, io=InterruptStream("q", 1, 1, 0, 2)),)), 10)
    with pytest.raises(WorkloadError):
        run(ts, Workload((), (RawInterrupt(0, "p", "zz", 1),)), 10)
    with pytest.raises(WorkloadError):
        run(ts, Workload())


def test_workload_from_json():
    doc = {
        "jobs": [{"ss": "tau1", "busy": 8, "io": {"K": 4, "B_lo": 1, "F": 1, "I": 2, "pibs": "pibs"}}],
        "interrupts": [{"t": 40, "handler": "pibs", "ss": "tau1", "B": 1}],
        "horizon": 48, "list_len": 3, "merge_policy": "MERGE_TAIL", "overhead": 1,
    }
    wl = Workload.from_json(json.dumps(doc))
    assert wl.jobs[0].io[0].handler == "pibs"
    assert wl.interrupts[0] == RawInterrupt(40, "pibs", "tau1", 1)
    assert wl.config.merge_policy is MergePolicy.MERGE_TAIL
    assert wl.horizon == 48 and wl.config.overhead == 1


def test_config_override():
    ts, wl = gantt_ss_only()
    tr = run(ts, wl, config=SimConfig(list_len=8))
    assert tr.of_kind("REPLENISH_MERGE") == []


# Scheduling behaviour


def test_priority_preemption():
    ts = TaskSet([SporadicServer("hi", 10, 3, priority=0), SporadicServer("lo", 20, 10, priority=1)])
    wl = Workload((JobSpec("hi", 3, offset=2), JobSpec("lo", 10)), config=SimConfig(blocking=False))
    tr = run(ts, wl, 20)
    # hi runs [2,5) and again [12,15) after its second release
    assert tr.executed("lo") == [(0, 2), (5, 12), (15, 16)]
    assert times(tr, "PREEMPT", "lo") == [2, 12]
    assert tr.misses() == []


def test_depleted_server_waits_for_replenishment():
    ts = TaskSet([SporadicServer("a", 10, 2)])
    wl = Workload((), (RawInterrupt(0, "a", "a", 5),))
    tr = run(ts, wl, 30)
    assert tr.executed("a") == [(0, 2), (10, 12), (20, 21)]
    assert times(tr, "DEPLETE") == [2, 12]


def test_dispatch_overhead_idles_the_cpu():
    ts = TaskSet([SporadicServer("a", 10, 4)])
    wl = Workload((JobSpec("a", 2),), config=SimConfig(overhead=1))
    tr = run(ts, wl, 10)
    assert tr.executed("a") == [(1, 3)]
    assert tr.jobs[0].finish == 3


def test_blocking_job_waits_for_its_io():
    ts = TaskSet([SporadicServer("a", 10, 2), SporadicServer("b", 10, 1)])
    io = InterruptStream("b", 3, 1, 0, 10)
    wl = Workload((JobSpec("a", 1, io=io),))
    tr = run(ts, wl, 40)
    # interrupts at 1, 11, 21: the job released at 10 runs after the last one
    assert tr.jobs[1].finish == 23
    assert tr.misses("a")


def test_hi_server_overrun_triggers_mode_change():
    ts = TaskSet([SporadicServer("h", 10, 2, 4, HI), SporadicServer("l", 20, 3)])
    wl = Workload((JobSpec("h", 2, 4), JobSpec("l", 3)),
                  config=SimConfig(blocking=False, overrun_from=0))
    tr = run(ts, wl, 40)
    mc = tr.mode_change
    assert (mc["time"], mc["trigger"]) == (2, "h")
    assert mc["budgets"] == {"h": 4, "l": 0}
    assert tr.jobs[0].finish == 4
    assert times(tr, "RELEASE", "l") == [0]
    assert tr.misses() == []
    assert len(tr.of_kind("MODE_CHANGE")) == 1


def test_lo_server_survives_in_extended_mode():
    ts = TaskSet([SporadicServer("h", 10, 2, 4, HI), SporadicServer("l", 20, 4, 1)])
    wl = Workload((JobSpec("h", 2, 4), JobSpec("l", 1)),
                  config=SimConfig(blocking=False, overrun_from=0, extended=True))
    tr = run(ts, wl, 40)
    assert tr.mode_change["budgets"] == {"h": 4, "l": 1}
    assert times(tr, "RELEASE", "l") == [0, 20]
    assert tr.misses() == []


def test_hi_pibs_overrun_triggers_mode_change():
    ts = TaskSet([SporadicServer("s", 16, 4, 4, HI)], [Pibs("p", "1/4", "1/2", HI)], {"p": "s"})
    wl = Workload((), (RawInterrupt(0, "p", "s", 6),))
    tr = run(ts, wl, 32)
    assert (tr.mode_change["time"], tr.mode_change["trigger"]) == (4, "p")
    assert tr.mode_change["pibs_util"] == {"p": "1/2"}
    # the budget restarts at 8 ticks, enough for the last two
    assert tr.executed("p") == [(0, 6)]


def test_forced_mode_change_disables_lo_pibs():
    ts = TaskSet([SporadicServer("h", 16, 2, 4, HI), SporadicServer("l", 16, 2)],
                 [Pibs("q", "1/4")], {"q": "l"})
    raws = (RawInterrupt(5, "q", "l", 1), RawInterrupt(20, "q", "l", 1))
    wl = Workload((), raws, config=SimConfig(mode_change_at=10))
    tr = run(ts, wl, 40)
    assert tr.mode_change["trigger"] == "forced"
    assert tr.mode_change["pibs_util"] == {"q": "0/1"}
    assert tr.executed("q") == [(5, 6)]


# Properties


@st.composite
def lone_pibs(draw):
    q = draw(st.integers(2, 12))
    u = Fraction(draw(st.integers(1, q - 1)), q)
    T = draw(st.integers(4, 60))
    if int(u * T) < 1:
        T = q * draw(st.integers(1, 5))
    raws = []
    t = 0
    for _ in range(draw(st.integers(1, 12))):
        t += draw(st.integers(0, T))
        raws.append(RawInterrupt(t, "p", "s", draw(st.integers(1, 2 * int(u * T)))))
    return u, T, tuple(raws)


@given(lone_pibs())
def test_pibs_window_bound(case):
    u, T, raws = case
    ts = TaskSet([SporadicServer("s", T, 1)], [Pibs("p", u)], {"p": "s"})
    tr = run(ts, Workload((), raws), raws[-1].time + 3 * T)
    assert max_window_execution(tr.executed("p"), T) <= ceil_frac((2 - u) * u * T)
    assert check_trace(tr) == []


@given(st.integers(3, 30), st.data())
def test_server_never_exceeds_capacity_per_period(T, data):
    C = data.draw(st.integers(1, T))
    raws = []
    t = 0
    for _ in range(data.draw(st.integers(1, 15))):
        t += data.draw(st.integers(0, T))
        raws.append(RawInterrupt(t, "s", "s", data.draw(st.integers(1, 2 * C))))
    ts = TaskSet([SporadicServer("s", T, C)])
    length = data.draw(st.integers(1, 4))
    policy = data.draw(st.sampled_from(list(MergePolicy)))
    tr = run(ts, Workload((), tuple(raws), config=SimConfig(list_len=length, merge_policy=policy)),
             t + 4 * T)
    assert max_window_execution(tr.executed("s"), T) <= C
