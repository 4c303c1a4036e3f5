"""Task-set model shared by the analyses, the simulator and the generator.

Times are integer ticks. Utilizations are :class:`fractions.Fraction` so
that every ceiling taken by the analyses is exact.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional


class CritLevel(enum.IntEnum):
    LO = 0
    HI = 1

    @classmethod
    def parse(cls, value) -> "CritLevel":
        if isinstance(value, CritLevel):
            return value
        return cls[str(value).upper()]


LO = CritLevel.LO
HI = CritLevel.HI


def ceil_div(a: int, b: int) -> int:
    """Exact integer ceiling of a / b for b > 0."""
    return -(-a // b)


def ceil_frac(x: Fraction) -> int:
    return -(-x.numerator // x.denominator)


def as_util(value) -> Fraction:
    """Parse a utilization given as Fraction, int, "p/q" string or decimal string."""
    if isinstance(value, Fraction):
        u = value
    elif isinstance(value, float):
        raise TypeError("utilizations must be exact; pass a Fraction or a 'p/q' string")
    else:
        u = Fraction(value)
    if u < 0 or u > 1:
        raise ValueError(f"utilization {u} outside [0, 1]")
    return u


def util_str(u: Fraction) -> str:
    return f"{u.numerator}/{u.denominator}"


@dataclass(frozen=True)
class SporadicServer:
    id: str
    period: int
    capacity_lo: int
    capacity_hi: Optional[int] = None
    crit: CritLevel = LO
    priority: Optional[int] = None
    deadline: Optional[int] = None

    def __post_init__(self):
        if self.deadline is None:
            object.__setattr__(self, "deadline", self.period)
        if self.period <= 0:
            raise ValueError(f"{self.id}: period must be positive")
        if self.deadline != self.period:
            raise ValueError(f"{self.id}: only implicit deadlines (D = T) are supported")
        if self.capacity_lo < 0:
            raise ValueError(f"{self.id}: negative capacity")
        if self.crit == HI:
            if self.capacity_hi is None:
                object.__setattr__(self, "capacity_hi", self.capacity_lo)
            if self.capacity_hi < self.capacity_lo:
                raise ValueError(f"{self.id}: HI server needs capacity_hi >= capacity_lo")
        elif self.capacity_hi is not None and self.capacity_hi > self.capacity_lo:
            raise ValueError(f"{self.id}: LO server needs capacity_hi <= capacity_lo")

    def capacity(self, level: CritLevel) -> int:
        """Budget in the given mode; 0 when the server does not run in that mode."""
        if level == LO:
            return self.capacity_lo
        return self.capacity_hi or 0

    @property
    def survives_hi(self) -> bool:
        return self.crit == HI or bool(self.capacity_hi)


@dataclass(frozen=True)
class Pibs:
    id: str
    util_lo: Fraction
    util_hi: Optional[Fraction] = None
    crit: CritLevel = LO

    def __post_init__(self):
        object.__setattr__(self, "util_lo", as_util(self.util_lo))
        if self.util_hi is not None:
            object.__setattr__(self, "util_hi", as_util(self.util_hi))
        if self.crit == HI:
            if self.util_hi is None:
                object.__setattr__(self, "util_hi", self.util_lo)
            if self.util_hi < self.util_lo:
                raise ValueError(f"{self.id}: HI PIBS needs util_hi >= util_lo")
        elif self.util_hi is not None and self.util_hi > self.util_lo:
            raise ValueError(f"{self.id}: LO PIBS needs util_hi <= util_lo")

    def util(self, level: CritLevel) -> Fraction:
        if level == LO:
            return self.util_lo
        return self.util_hi if self.util_hi is not None else Fraction(0)


@dataclass(frozen=True)
class TaskSet:
    servers: tuple = ()
    pibs: tuple = ()
    bindings: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "servers", tuple(self.servers))
        object.__setattr__(self, "pibs", tuple(self.pibs))
        object.__setattr__(self, "bindings", dict(self.bindings or {}))
        ids = [s.id for s in self.servers] + [p.id for p in self.pibs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate ids in task set")
        sids = {s.id for s in self.servers}
        pids = {p.id for p in self.pibs}
        for p, s in self.bindings.items():
            if p not in pids:
                raise ValueError(f"binding for unknown PIBS {p!r}")
            if s not in sids:
                raise ValueError(f"PIBS {p!r} bound to unknown server {s!r}")
        prios = [s.priority for s in self.servers if s.priority is not None]
        if len(set(prios)) != len(prios):
            raise ValueError("priorities must be unique")

    # lookups

    def server(self, sid: str) -> SporadicServer:
        for s in self.servers:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def pibs_by_id(self, pid: str) -> Pibs:
        for p in self.pibs:
            if p.id == pid:
                return p
        raise KeyError(pid)

    @property
    def has_priorities(self) -> bool:
        return all(s.priority is not None for s in self.servers)

    def by_priority(self) -> list:
        """Servers ordered from highest to lowest priority (ties by id)."""
        self._require_priorities()
        return sorted(self.servers, key=lambda s: (s.priority, s.id))

    def _require_priorities(self):
        if not self.has_priorities:
            raise ValueError("priorities not assigned")

    # priority sets

    def hp(self, sid: str) -> list:
        """Ids of servers with priority equal to or higher than ``sid``, excluding it."""
        me = self.server(sid)
        self._require_priorities()
        return [s.id for s in self.by_priority() if s.id != sid and s.priority <= me.priority]

    def hip(self, sid: str) -> list:
        return self.hp(sid) + [sid]

    def hpH(self, sid: str) -> list:
        return [j for j in self.hp(sid) if self.server(j).crit == HI]

    def hpL(self, sid: str) -> list:
        return [j for j in self.hp(sid) if self.server(j).crit == LO]

    def hipH(self, sid: str) -> list:
        return self.hpH(sid) + [sid]

    def hipL(self, sid: str) -> list:
        extra = [sid] if self.server(sid).crit == LO else []
        return self.hpL(sid) + extra

    # derived sets

    def with_priorities(self, prios: Mapping[str, int]) -> "TaskSet":
        servers = [replace(s, priority=prios[s.id]) for s in self.servers]
        return replace(self, servers=tuple(servers))

    def without_pibs(self) -> "TaskSet":
        return TaskSet(self.servers, (), {})

    def utilization(self, level: CritLevel = LO) -> Fraction:
        total = sum((Fraction(s.capacity(level), s.period) for s in self.servers), Fraction(0))
        return total + sum((p.util(level) for p in self.pibs), Fraction(0))

    # JSON interchange

    def to_dict(self) -> dict:
        servers = []
        for s in self.servers:
            d = {"id": s.id, "T": s.period, "C_lo": s.capacity_lo, "crit": s.crit.name}
            if s.capacity_hi is not None:
                d["C_hi"] = s.capacity_hi
            if s.priority is not None:
                d["prio"] = s.priority
            servers.append(d)
        pibs = []
        for p in self.pibs:
            d = {"id": p.id, "U_lo": util_str(p.util_lo), "crit": p.crit.name}
            if p.util_hi is not None:
                d["U_hi"] = util_str(p.util_hi)
            pibs.append(d)
        doc = {"servers": servers, "pibs": pibs}
        if self.bindings:
            doc["bindings"] = dict(self.bindings)
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TaskSet":
        servers = [
            SporadicServer(
                id=str(d["id"]),
                period=int(d["T"]),
                capacity_lo=int(d["C_lo"]),
                capacity_hi=None if d.get("C_hi") is None else int(d["C_hi"]),
                crit=CritLevel.parse(d.get("crit", "LO")),
                priority=None if d.get("prio") is None else int(d["prio"]),
            )
            for d in doc.get("servers", [])
        ]
        pibs = [
            Pibs(
                id=str(d["id"]),
                util_lo=as_util(d["U_lo"]),
                util_hi=None if d.get("U_hi") is None else as_util(d["U_hi"]),
                crit=CritLevel.parse(d.get("crit", "LO")),
            )
            for d in doc.get("pibs", [])
        ]
        return cls(servers, pibs, doc.get("bindings") or {})

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "TaskSet":
        return cls.from_dict(json.loads(text))


def assign_rate_monotonic(ts: TaskSet) -> TaskSet:
    """Shortest period gets the highest priority (0); equal periods go by id."""
    order = sorted(ts.servers, key=lambda s: (s.period, s.id))
    return ts.with_priorities({s.id: k for k, s in enumerate(order)})


def ensure_priorities(ts: TaskSet) -> TaskSet:
    return ts if ts.has_priorities else assign_rate_monotonic(ts)


def candidate_servers(ts: TaskSet, pid: str, only: Optional[Iterable[str]] = None) -> list:
    """Servers a PIBS may run on behalf of: its binding if known, otherwise all."""
    if pid in ts.bindings:
        cands = [ts.bindings[pid]]
    else:
        cands = [s.id for s in ts.servers]
    if only is not None:
        allowed = set(only)
        cands = [c for c in cands if c in allowed]
    return cands
