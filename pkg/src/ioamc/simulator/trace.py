"""Scheduling event traces and the checks run over them."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

KINDS = (
    "RELEASE", "DISPATCH", "PREEMPT", "BLOCK", "DEPLETE", "REPLENISH_POST",
    "REPLENISH_MERGE", "IO_INIT", "IRQ_TOP", "BH_START", "BH_END",
    "MODE_CHANGE", "JOB_END", "DEADLINE_MISS",
)

_ENDS = {"PREEMPT", "BLOCK", "DEPLETE"}


@dataclass(frozen=True)
class Event:
    time: int
    kind: str
    subject: str
    detail: dict = field(default_factory=dict, compare=True, hash=False)

    def to_dict(self) -> dict:
        return {"t": self.time, "kind": self.kind, "subject": self.subject, "detail": self.detail}

    @classmethod
    def from_dict(cls, d: dict) -> "Event":
        return cls(int(d["t"]), d["kind"], d["subject"], dict(d.get("detail") or {}))


@dataclass
class JobRecord:
    server: str
    index: int
    release: int
    deadline: int
    finish: Optional[int] = None

    @property
    def response(self) -> Optional[int]:
        return None if self.finish is None else self.finish - self.release


class SimTrace:
    """Ordered scheduling events plus the per-job and execution bookkeeping.

    ``segments`` holds ``(subject, start, end)`` execution intervals with
    adjacent pieces of the same subject already joined.
    """

    def __init__(self, horizon: int = 0):
        self.horizon = horizon
        self.events: list = []
        self.jobs: list = []
        self.segments: list = []
        self.mode_change: Optional[dict] = None

    def emit(self, time: int, kind: str, subject: str, **detail) -> None:
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind}")
        self.events.append(Event(time, kind, subject, detail))

    def add_segment(self, subject: str, start: int, end: int) -> None:
        if end <= start:
            return
        if self.segments:
            s, a, b = self.segments[-1]
            if s == subject and b == start:
                self.segments[-1] = (s, a, end)
                return
        self.segments.append((subject, start, end))

    # queries

    def of_kind(self, kind: str, subject: Optional[str] = None) -> list:
        return [e for e in self.events
                if e.kind == kind and (subject is None or e.subject == subject)]

    def misses(self, subjects: Optional[Iterable[str]] = None) -> list:
        wanted = None if subjects is None else set(subjects)
        return [e for e in self.of_kind("DEADLINE_MISS")
                if wanted is None or e.subject in wanted]

    def worst_response(self, sid: str, released_before: Optional[int] = None) -> Optional[int]:
        """Largest observed response time of a server's jobs.

        Returns None if one of the considered jobs never finished.
        """
        worst = 0
        for j in self.jobs:
            if j.server != sid:
                continue
            if released_before is not None and j.release >= released_before:
                continue
            if j.finish is None:
                return None
            worst = max(worst, j.finish - j.release)
        return worst

    def executed(self, subject: str) -> list:
        return [(a, b) for s, a, b in self.segments if s == subject]

    # serialization

    def to_ndjson(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in self.events)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "kind", "subject", "detail"])
        for e in self.events:
            w.writerow([e.time, e.kind, e.subject,
                        ";".join(f"{k}={v}" for k, v in sorted(e.detail.items()))])
        return buf.getvalue()

    @staticmethod
    def events_from_ndjson(text: str) -> list:
        return [Event.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def max_window_execution(intervals: Iterable, window: int) -> int:
    """Largest amount of execution from ``intervals`` inside any window of the given length.

    The maximum is reached by a window that starts at an interval start or
    ends at an interval end, so only those positions are tried.
    """
    ivs = sorted(intervals)
    if not ivs:
        return 0
    starts = {a for a, _ in ivs} | {b - window for _, b in ivs}
    best = 0
    for w0 in starts:
        w1 = w0 + window
        tot = 0
        for a, b in ivs:
            if a >= w1:
                break
            lo, hi = max(a, w0), min(b, w1)
            if hi > lo:
                tot += hi - lo
        best = max(best, tot)
    return best


def check_trace(trace: SimTrace) -> list:
    """Structural problems in a trace; an empty list means it is well formed."""
    problems = []
    last = None
    open_runs: dict = {}
    for e in trace.events:
        if last is not None and e.time < last:
            problems.append(f"time goes backwards at {e}")
        last = e.time
        if e.kind == "DISPATCH":
            if e.subject in open_runs:
                problems.append(f"{e.subject} dispatched twice at {e.time}")
            open_runs[e.subject] = e.time
        elif e.kind in _ENDS:
            open_runs.pop(e.subject, None)
    if len(trace.of_kind("MODE_CHANGE")) > 1:
        problems.append("more than one mode change")
    return problems
