"""Discrete-event scheduler for Sporadic Servers and PIBS on one CPU.

Time advances from event to event in integer ticks. At every instant the
engine applies, in order: finished work, deadline checks, replenishments
becoming eligible, interrupt arrivals, job releases, a forced mode change,
budget bookkeeping (block, deplete, activation, mode-change triggers) and
finally the dispatch decision.

A server activation starts as soon as it has both pending work and eligible
budget; the consumed amount is posted one period after that instant.
"""

from __future__ import annotations

import heapq
from collections import deque
from typing import Optional

from ..model import HI, LO, TaskSet, ensure_priorities
from .replenish import (
    PibsState, ReplenishmentQueue, hi_server_adjust, lo_server_adjust, pibs_post,
)
from .trace import JobRecord, SimTrace
from .workload import SimConfig, Workload, WorkloadError

_IRQ, _RELEASE, _FORCED = 1, 2, 3


class _Job:
    __slots__ = ("record", "busy", "busy_hi", "hi", "executed", "dropped")

    def __init__(self, record, busy, busy_hi, hi):
        self.record = record
        self.busy = busy
        self.busy_hi = busy_hi
        self.hi = hi
        self.executed = 0
        self.dropped = False

    def remaining(self) -> int:
        return max(0, (self.busy_hi if self.hi else self.busy) - self.executed)


class _BottomHalf:
    __slots__ = ("requester", "length", "done", "started", "counted", "seq")

    def __init__(self, requester, length, counted, seq):
        self.requester = requester
        self.length = length
        self.done = 0
        self.started = False
        self.counted = counted
        self.seq = seq

    def remaining(self) -> int:
        return self.length - self.done


class _Server:
    kind = "ss"

    def __init__(self, spec, cfg: SimConfig, template):
        self.spec = spec
        self.id = spec.id
        self.prio = spec.priority
        self.period = spec.period
        self.crit = spec.crit
        self.c_lo = spec.capacity_lo
        self.c_hi = spec.capacity_hi or 0
        self.queue = ReplenishmentQueue(spec.capacity_lo, cfg.list_len, cfg.merge_policy)
        self.template = template
        self.active = False
        self.since = 0
        self.jobs: deque = deque()
        self.bhs: deque = deque()
        self.io_left = 0
        self.suspended = False
        self.last_deadline = spec.period
        self.next_index = 0

    def work(self, blocking: bool):
        if self.bhs:
            return self.bhs[0]
        if self.jobs and (not blocking or self.io_left == 0):
            return self.jobs[0]
        return None


class _Pibs:
    kind = "pibs"

    def __init__(self, spec):
        self.spec = spec
        self.id = spec.id
        self.crit = spec.crit
        self.state = PibsState(util=spec.util_lo)
        self.pending: deque = deque()
        self.disabled = spec.util_lo == 0

    def serving_work(self):
        st = self.state
        if st.in_run and self.pending and self.pending[0].requester == st.serving:
            return self.pending[0]
        return None


class Engine:
    def __init__(self, ts: TaskSet, workload: Workload, horizon: int):
        ts = ensure_priorities(ts)
        workload.validate(ts)
        if horizon < 0:
            raise WorkloadError("negative horizon")
        self.ts = ts
        self.cfg = workload.config
        self.horizon = horizon
        templates = {j.server: j for j in workload.jobs}
        self.servers = {s.id: _Server(s, self.cfg, templates.get(s.id)) for s in ts.by_priority()}
        self.order = list(self.servers.values())
        self.pibs = {p.id: _Pibs(p) for p in sorted(ts.pibs, key=lambda p: p.id)}
        self.trace = SimTrace(horizon)
        self.mode = LO
        self.running = None
        self.stall_until = 0
        self._events: list = []
        self._deadlines: list = []
        self._seq = 0
        for s in self.order:
            if s.template is not None and s.template.offset < horizon:
                self._push(s.template.offset, _RELEASE, s.id)
        for r in workload.interrupts:
            self._push(r.time, _IRQ, (r.handler, r.requester, r.B, r.B, False))
        if self.cfg.mode_change_at is not None:
            self._push(int(self.cfg.mode_change_at), _FORCED, None)

    # helpers

    def _push(self, time, rank, payload):
        self._seq += 1
        heapq.heappush(self._events, (time, rank, self._seq, payload))

    def _overrun(self, now) -> bool:
        return self.mode == HI or (self.cfg.overrun_from is not None and now >= self.cfg.overrun_from)

    def _emit(self, now, kind, subject, **detail):
        self.trace.emit(now, kind, subject, **detail)

    def _post(self, s: _Server, now: int) -> None:
        for what, t, amt in s.queue.post(s.since, s.period):
            kind = "REPLENISH_MERGE" if what == "merge" else "REPLENISH_POST"
            self._emit(now, kind, s.id, at=t, amount=amt)

    def _stop(self, ent) -> None:
        if self.running is ent:
            self.running = None

    # main loop

    def run(self) -> SimTrace:
        now = 0
        while True:
            self._check_deadlines(now)
            if now >= self.horizon:
                break
            self._replenish(now)
            self._pop_events(now)
            self._settle(now)
            self._dispatch(now)
            nxt = self._next_time(now)
            self._advance(now, nxt)
            now = nxt
        return self.trace

    def _check_deadlines(self, now):
        dl = self._deadlines
        while dl and dl[0][0] <= now:
            _, _, sid, job = heapq.heappop(dl)
            if job.record.finish is None and not job.dropped:
                self._emit(now, "DEADLINE_MISS", sid, job=job.record.index,
                           release=job.record.release)

    def _replenish(self, now):
        for s in self.order:
            if not s.active:
                continue
            items = s.queue.items
            if len(items) > 1 and items[1].time <= now:
                self._post(s, now)
                s.queue.activate(now)
                s.since = now

    def _pop_events(self, now):
        ev = self._events
        while ev and ev[0][0] <= now:
            _, rank, _, payload = heapq.heappop(ev)
            if rank == _IRQ:
                self._interrupt(now, *payload)
            elif rank == _RELEASE:
                self._release(now, self.servers[payload])
            elif self.mode == LO:
                self._mode_change(now, "forced")

    def _interrupt(self, now, handler, requester, b_lo, b_hi, counted):
        self._seq += 1
        bh = _BottomHalf(requester, b_hi if self._overrun(now) else b_lo, counted, self._seq)
        self._emit(now, "IRQ_TOP", handler, ss=requester, B=bh.length)
        if handler in self.pibs:
            self.pibs[handler].pending.append(bh)
        else:
            self.servers[handler].bhs.append(bh)

    def _release(self, now, s: _Server):
        tpl = s.template
        if now + s.period < self.horizon:
            self._push(now + s.period, _RELEASE, s.id)
        if s.suspended:
            return
        rec = JobRecord(s.id, s.next_index, now, now + s.period)
        s.next_index += 1
        s.last_deadline = rec.deadline
        job = _Job(rec, tpl.busy, tpl.busy_hi, self._overrun(now))
        s.jobs.append(job)
        self.trace.jobs.append(rec)
        self._seq += 1
        heapq.heappush(self._deadlines, (rec.deadline, self._seq, s.id, job))
        self._emit(now, "RELEASE", s.id, job=rec.index, deadline=rec.deadline)

    # budget bookkeeping

    def _settle(self, now):
        while True:
            trigger = None
            blocking = self.cfg.blocking
            for s in self.order:
                if s.suspended:
                    continue
                w = s.work(blocking)
                if s.active:
                    if w is None:
                        self._emit(now, "BLOCK", s.id)
                        self._post(s, now)
                        s.active = False
                        self._stop(s)
                    elif s.queue.available(now) == 0:
                        self._emit(now, "DEPLETE", s.id)
                        self._post(s, now)
                        s.active = False
                        self._stop(s)
                        if (self.mode == LO and s.crit == HI and isinstance(w, _Job)
                                and not any(i.time < w.record.deadline for i in s.queue.items)):
                            trigger = trigger or s.id
                # a post landing at ``now`` can restart the server at once
                if not s.active and w is not None and s.queue.eligible(now) > 0:
                    s.queue.activate(now)
                    s.active = True
                    s.since = now
            for p in self.pibs.values():
                st = p.state
                if st.in_run:
                    w = p.serving_work()
                    if w is None:
                        self._emit(now, "BLOCK", p.id)
                        self._end_run(p, now)
                    elif st.remaining() == 0:
                        self._emit(now, "DEPLETE", p.id)
                        if self.mode == LO and p.crit == HI and w.done > 0:
                            trigger = trigger or p.id
                        self._end_run(p, now)
                if (not st.in_run and not p.disabled and p.pending
                        and st.eligible_at <= now):
                    req = self.servers[p.pending[0].requester]
                    if int(st.util * req.period) > 0:
                        st.begin(now, req.id, req.period)
            if trigger is None:
                return
            self._mode_change(now, trigger)

    def _end_run(self, p: _Pibs, now):
        st = p.state
        start, used, budget = st.start, st.consumed, st.budget
        pibs_post(st, start, used)
        self._emit(now, "REPLENISH_POST", p.id, at=st.eligible_at, amount=budget, used=used)
        self._stop(p)

    def _mode_change(self, now, trigger):
        self.mode = HI
        for s in self.order:
            if s.suspended:
                continue
            if s.crit == HI:
                hi_server_adjust(s.queue, now, s.c_lo, s.c_hi)
            elif self.cfg.extended and s.c_hi > 0:
                was_used = s.queue.usage
                lo_server_adjust(s.queue, now, s.last_deadline, s.period, s.c_lo, s.c_hi)
                if s.active and was_used and s.queue.usage == 0:
                    s.queue.activate(now)
                    s.since = now
            else:
                if s.active:
                    self._emit(now, "BLOCK", s.id, reason="suspended")
                    s.active = False
                    s.queue.usage = 0
                    self._stop(s)
                s.suspended = True
                for j in s.jobs:
                    j.dropped = True
                s.jobs.clear()
                continue
            for j in s.jobs:
                j.hi = True
        for p in self.pibs.values():
            st = p.state
            st.util = p.spec.util(HI)
            if st.util == 0:
                if st.in_run:
                    self._emit(now, "BLOCK", p.id, reason="suspended")
                    st.serving = None
                    self._stop(p)
                p.disabled = True
                continue
            st.eligible_at = now
            if st.in_run:
                st.begin(now, st.serving, self.servers[st.serving].period)
        budgets = {s.id: (0 if s.suspended else s.queue.total) for s in self.order}
        utils = {p.id: f"{p.state.util.numerator}/{p.state.util.denominator}"
                 for p in self.pibs.values()}
        self.trace.mode_change = {"time": now, "trigger": trigger,
                                  "budgets": budgets, "pibs_util": utils}
        self._emit(now, "MODE_CHANGE", trigger, budgets=budgets, pibs_util=utils)

    # dispatch and execution

    def _dispatch(self, now):
        best, best_key = None, None
        for s in self.order:
            if s.active:
                key = (s.prio, s.since, 0, s.id)
                if best_key is None or key < best_key:
                    best, best_key = s, key
        for p in self.pibs.values():
            if p.serving_work() is not None and p.state.remaining() > 0:
                st = p.state
                key = (self.servers[st.serving].prio, st.start, 1, p.id)
                if best_key is None or key < best_key:
                    best, best_key = p, key
        if best is not self.running:
            if self.running is not None:
                self._emit(now, "PREEMPT", self.running.id)
            if best is not None:
                detail = {"serving": best.state.serving} if best.kind == "pibs" else {}
                self._emit(now, "DISPATCH", best.id, **detail)
                self.stall_until = now + self.cfg.overhead
            self.running = best
        if best is not None:
            w = self._current(best)
            if isinstance(w, _BottomHalf) and not w.started:
                w.started = True
                self._emit(now, "BH_START", best.id, ss=w.requester)

    def _current(self, ent):
        if ent.kind == "pibs":
            return ent.serving_work()
        return ent.work(self.cfg.blocking)

    def _budget_left(self, ent, now) -> int:
        if ent.kind == "pibs":
            return ent.state.remaining()
        return ent.queue.available(now)

    def _next_time(self, now) -> int:
        nxt = self.horizon
        if self._events:
            nxt = min(nxt, self._events[0][0])
        if self._deadlines:
            nxt = min(nxt, self._deadlines[0][0])
        blocking = self.cfg.blocking
        for s in self.order:
            if s.suspended:
                continue
            if s.active or s.work(blocking) is not None:
                t = s.queue.next_time_after(now)
                if t is not None:
                    nxt = min(nxt, t)
        for p in self.pibs.values():
            st = p.state
            if not st.in_run and p.pending and not p.disabled and st.eligible_at > now:
                nxt = min(nxt, st.eligible_at)
        r = self.running
        if r is not None:
            begin = max(now, self.stall_until)
            w = self._current(r)
            nxt = min(nxt, begin + min(w.remaining(), self._budget_left(r, now)))
        return nxt if nxt > now else now + 1

    def _advance(self, now, nxt):
        r = self.running
        if r is None:
            return
        begin = max(now, self.stall_until)
        work = nxt - begin
        if work <= 0:
            return
        w = self._current(r)
        if r.kind == "pibs":
            r.state.consumed += work
        else:
            r.queue.consume(work, now)
        if isinstance(w, _Job):
            w.executed += work
        else:
            w.done += work
        self.trace.add_segment(r.id, begin, nxt)
        if w.remaining() == 0:
            self._complete(r, w, nxt)

    def _complete(self, ent, w, now):
        if isinstance(w, _BottomHalf):
            (ent.pending if ent.kind == "pibs" else ent.bhs).popleft()
            self._emit(now, "BH_END", ent.id, ss=w.requester)
            if w.counted:
                self.servers[w.requester].io_left -= 1
            return
        s = ent
        s.jobs.popleft()
        w.record.finish = now
        self._emit(now, "JOB_END", s.id, job=w.record.index)
        for io in s.template.io:
            s.io_left += io.K
            self._emit(now, "IO_INIT", s.id, handler=io.handler, K=io.K)
            for t in io.arrivals(now):
                self._push(t, _IRQ, (io.handler, s.id, io.B_lo, io.B_hi, True))


def run(ts: TaskSet, workload: Workload, horizon: Optional[int] = None,
        config: Optional[SimConfig] = None) -> SimTrace:
    """Simulate ``ts`` under ``workload`` over ``[0, horizon)``.

    Deadlines falling exactly at the horizon are still checked. ``config``
    overrides the workload's own options when given.
    """
    if config is not None:
        workload = Workload(workload.jobs, workload.interrupts, workload.horizon, config)
    if horizon is None:
        horizon = workload.horizon
    if horizon is None:
        raise WorkloadError("no horizon given")
    return Engine(ts, workload, int(horizon)).run()
