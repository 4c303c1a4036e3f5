"""Simulation inputs: per-server job templates, interrupt streams and run options."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..model import TaskSet
from .replenish import MergePolicy


class WorkloadError(ValueError):
    pass


@dataclass(frozen=True)
class InterruptStream:
    """Bottom halves raised by one I/O request.

    ``K`` interrupts arrive at ``F, F + I, ..., F + (K-1) I`` after the I/O is
    initiated; each needs ``B_lo`` ticks in LO mode and ``B_hi`` in HI mode.
    ``handler`` is the PIBS (or server) that runs the bottom halves.
    """

    handler: str
    K: int
    B_lo: int
    F: int
    I: int
    B_hi: Optional[int] = None

    def __post_init__(self):
        if self.B_hi is None:
            object.__setattr__(self, "B_hi", self.B_lo)
        if self.K < 1 or self.B_lo < 1 or self.F < 0:
            raise WorkloadError("interrupt stream needs K >= 1, B >= 1, F >= 0")
        if self.K > 1 and self.I <= max(self.B_lo, self.B_hi):
            raise WorkloadError("inter-arrival I must exceed the bottom-half length")

    def arrivals(self, init: int) -> list:
        return [init + self.F + m * self.I for m in range(self.K)]


@dataclass(frozen=True)
class JobSpec:
    """Periodic jobs of one server: ``busy`` ticks each, released every period.

    ``io`` holds the interrupt streams each job starts when it finishes; a
    single stream may be given on its own.
    """

    server: str
    busy: int
    busy_hi: Optional[int] = None
    offset: int = 0
    io: tuple = ()

    def __post_init__(self):
        if self.io is None:
            object.__setattr__(self, "io", ())
        elif isinstance(self.io, InterruptStream):
            object.__setattr__(self, "io", (self.io,))
        else:
            object.__setattr__(self, "io", tuple(self.io))
        if self.busy_hi is None:
            object.__setattr__(self, "busy_hi", self.busy)
        if self.busy < 1 or self.busy_hi < 1:
            raise WorkloadError(f"{self.server}: zero-length job")
        if self.offset < 0:
            raise WorkloadError(f"{self.server}: negative offset")


@dataclass(frozen=True)
class RawInterrupt:
    """One interrupt placed by hand, outside any job's I/O."""

    time: int
    handler: str
    requester: str
    B: int

    def __post_init__(self):
        if self.B < 1 or self.time < 0:
            raise WorkloadError("raw interrupt needs B >= 1 and t >= 0")


@dataclass(frozen=True)
class SimConfig:
    """Run options.

    Attributes:
        list_len: Replenishment-list capacity of every server.
        merge_policy: What to do when a post would overflow the list.
        extended: LO servers keep running in HI mode with their C(HI)
            budget; otherwise they are suspended at the mode change.
        blocking: A job waits for the previous job's I/O to finish.
        overhead: Idle ticks charged at every dispatch of a new subject.
        mode_change_at: Force a mode change at this tick.
        overrun_from: Jobs released and interrupts raised from this tick on
            use their HI-mode demand.
    """

    list_len: int = 8
    merge_policy: MergePolicy = MergePolicy.MERGE_NEXT
    extended: bool = False
    blocking: bool = True
    overhead: int = 0
    mode_change_at: Optional[int] = None
    overrun_from: Optional[int] = None


@dataclass(frozen=True)
class Workload:
    jobs: tuple = ()
    interrupts: tuple = ()
    horizon: Optional[int] = None
    config: SimConfig = field(default_factory=SimConfig)

    def validate(self, ts: TaskSet) -> None:
        sids = {s.id for s in ts.servers}
        handlers = sids | {p.id for p in ts.pibs}
        seen = set()
        for j in self.jobs:
            if j.server not in sids:
                raise WorkloadError(f"job template for unknown server {j.server!r}")
            if j.server in seen:
                raise WorkloadError(f"two job templates for {j.server!r}")
            seen.add(j.server)
            for stream in j.io:
                if stream.handler not in handlers:
                    raise WorkloadError(f"unknown interrupt handler {stream.handler!r}")
        for r in self.interrupts:
            if r.handler not in handlers or r.requester not in sids:
                raise WorkloadError(f"raw interrupt with unknown ids: {r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "Workload":
        jobs = []
        for d in doc.get("jobs", []):
            io = d.get("io") or []
            if isinstance(io, dict):
                io = [io]
            streams = tuple(
                InterruptStream(
                    handler=str(x.get("pibs", x.get("handler"))),
                    K=int(x["K"]), B_lo=int(x["B_lo"]), B_hi=x.get("B_hi"),
                    F=int(x["F"]), I=int(x["I"]),
                )
                for x in io
            )
            jobs.append(JobSpec(str(d["ss"]), int(d["busy"]), d.get("busy_hi"),
                                int(d.get("offset", 0)), streams))
        raws = [RawInterrupt(int(r["t"]), str(r["handler"]), str(r["ss"]), int(r["B"]))
                for r in doc.get("interrupts", [])]
        cfg = SimConfig(
            list_len=int(doc.get("list_len", 8)),
            merge_policy=MergePolicy(doc.get("merge_policy", "MERGE_NEXT")),
            extended=bool(doc.get("extended", False)),
            blocking=bool(doc.get("blocking", True)),
            overhead=int(doc.get("overhead", 0)),
            mode_change_at=doc.get("mode_change_at"),
            overrun_from=doc.get("overrun_from"),
        )
        return cls(tuple(jobs), tuple(raws), doc.get("horizon"), cfg)

    @classmethod
    def from_json(cls, text: str) -> "Workload":
        return cls.from_dict(json.loads(text))
