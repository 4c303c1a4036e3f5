"""Budget bookkeeping for Sporadic Servers and PIBS.

A :class:`ReplenishmentQueue` holds ``(time, amount)`` items whose amounts
always sum to the server's current capacity. Items with ``time <= now``
are eligible; ``usage`` is what the running activation has consumed from
the eligible head.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..model import ceil_frac


class MergePolicy(enum.Enum):
    MERGE_NEXT = "MERGE_NEXT"   # defer the head into the next item
    MERGE_TAIL = "MERGE_TAIL"   # fold the newest items together


@dataclass
class ReplenishmentItem:
    time: int
    amount: int

    def __post_init__(self):
        if self.amount <= 0:
            raise ValueError("replenishment amount must be positive")


class BudgetError(RuntimeError):
    pass


class ReplenishmentQueue:
    def __init__(self, capacity: int, max_length: int = 8,
                 policy: MergePolicy = MergePolicy.MERGE_NEXT, start: int = 0):
        if max_length < 1:
            raise ValueError("max_length must be positive")
        self.max_length = max_length
        self.policy = MergePolicy(policy)
        self.items: list = [ReplenishmentItem(start, capacity)] if capacity > 0 else []
        self.usage = 0

    def __len__(self):
        return len(self.items)

    def __repr__(self):
        body = ", ".join(f"({i.time},{i.amount})" for i in self.items)
        return f"ReplenishmentQueue([{body}], usage={self.usage})"

    def as_pairs(self) -> list:
        return [(i.time, i.amount) for i in self.items]

    @property
    def total(self) -> int:
        return sum(i.amount for i in self.items)

    @property
    def head(self) -> Optional[ReplenishmentItem]:
        return self.items[0] if self.items else None

    def eligible(self, now: int) -> int:
        return sum(i.amount for i in self.items if i.time <= now)

    def available(self, now: int) -> int:
        return self.eligible(now) - self.usage

    def next_time_after(self, now: int) -> Optional[int]:
        for item in self.items:
            if item.time > now:
                return item.time
        return None

    def activate(self, now: int) -> None:
        """Start of an activation: collapse eligible items into the head at ``now``."""
        elig = [i for i in self.items if i.time <= now]
        if not elig:
            return
        rest = self.items[len(elig):]
        self.items = [ReplenishmentItem(now, sum(i.amount for i in elig))] + rest

    def consume(self, amount: int, now: int) -> None:
        if amount > self.available(now):
            raise BudgetError(f"consuming {amount} with only {self.available(now)} available")
        self.usage += amount

    def post(self, start: int, period: int) -> list:
        """Close an activation that began at ``start``.

        The consumed amount leaves the front of the queue and returns as one
        item at ``start + period``. Returns ``(kind, time, amount)`` records
        for every merge forced by a full list, followed by the post itself.
        """
        used = self.usage
        self.usage = 0
        if used == 0:
            return []
        left = used
        while left:
            head = self.items[0]
            if head.amount <= left:
                left -= head.amount
                self.items.pop(0)
            else:
                head.amount -= left
                left = 0
        new = ReplenishmentItem(start + period, used)
        events = self._insert(new)
        events.append(("post", new.time, used))
        return events

    def _insert(self, new: ReplenishmentItem) -> list:
        events = []
        pos = len(self.items)
        while pos and self.items[pos - 1].time > new.time:
            pos -= 1
        self.items.insert(pos, new)
        while len(self.items) > self.max_length:
            if self.policy is MergePolicy.MERGE_NEXT:
                gone = self.items.pop(0)
                self.items[0].amount += gone.amount
                events.append(("merge", self.items[0].time, gone.amount))
            else:
                gone = self.items.pop(-2)
                self.items[-1].amount += gone.amount
                events.append(("merge", self.items[-1].time, gone.amount))
        return events

    def add_front(self, item: ReplenishmentItem) -> None:
        self.items.insert(0, item)


def ss_consume_post(queue: ReplenishmentQueue, start: int, end: int, period: int) -> list:
    """Charge one execution interval ``[start, end)`` and post its replenishment."""
    if end < start:
        raise ValueError("empty or reversed run")
    if queue.head is None or queue.head.time > start:
        raise BudgetError(f"no eligible budget at {start}")
    queue.activate(start)
    queue.consume(end - start, start)
    return queue.post(start, period)


def hi_server_adjust(queue: ReplenishmentQueue, now: int, c_lo: int, c_hi: int) -> None:
    """Grant a HI server its extra HI-mode budget at a mode change."""
    extra = c_hi - c_lo
    if extra <= 0:
        return
    head = queue.head
    if head is not None and (head.time <= now or len(queue) == queue.max_length):
        head.amount += extra
    else:
        queue.add_front(ReplenishmentItem(now, extra))


def lo_server_adjust(queue: ReplenishmentQueue, now: int, deadline: int, period: int,
                     c_lo: int, c_hi: int) -> None:
    """Strip a LO server's budget down to its HI-mode capacity at a mode change.

    Budget is removed walking backwards from the last item before the
    deadline; a partly used head is reposted one period later with just its
    used amount. Whatever cannot be removed this period comes off the tail.
    """
    reduced = c_lo - c_hi
    items = queue.items
    idx = None
    for k, item in enumerate(items):
        if item.time < deadline:
            idx = k
    while reduced > 0 and idx is not None:
        rd = items[idx]
        if idx == 0 and queue.usage > 0:
            if rd.amount - queue.usage > reduced:
                rd.amount -= reduced
                reduced = 0
            else:
                reduced -= rd.amount - queue.usage
                items.pop(0)
                rd.amount = queue.usage
                rd.time = rd.time + period
                pos = len(items)
                while pos and items[pos - 1].time > rd.time:
                    pos -= 1
                items.insert(pos, rd)
                queue.usage = 0
            idx = None
        elif rd.amount <= reduced:
            reduced -= rd.amount
            items.pop(idx)
            idx = idx - 1 if idx > 0 else None
        else:
            rd.amount -= reduced
            reduced = 0
    while reduced > 0 and items:
        end = items[-1]
        if end.amount <= reduced:
            reduced -= end.amount
            items.pop()
        else:
            end.amount -= reduced
            reduced = 0
    # the strip may have eaten into a partly used head
    queue.usage = min(queue.usage, items[0].amount if items else 0)


@dataclass
class PibsState:
    """Single-replenishment state of a PIBS.

    ``eligible_at`` is the one outstanding replenishment time; the PIBS may
    start a new run only from then on. During a run it is bound to
    ``serving`` and may consume up to ``budget`` ticks.
    """

    util: Fraction
    eligible_at: int = 0
    serving: Optional[str] = None
    start: int = 0
    consumed: int = 0
    budget: int = 0

    @property
    def in_run(self) -> bool:
        return self.serving is not None

    def begin(self, now: int, serving: str, period: int) -> None:
        self.serving = serving
        self.start = now
        self.consumed = 0
        self.budget = int(self.util * period)

    def remaining(self) -> int:
        return self.budget - self.consumed


def pibs_post(state: PibsState, start: int, consumed: int) -> PibsState:
    """End a PIBS run: next run no earlier than ``start + consumed / U`` (ceiled)."""
    if consumed > state.budget and state.in_run:
        raise BudgetError("PIBS consumed more than its budget")
    if state.util == 0:
        state.eligible_at = start
    else:
        state.eligible_at = start + ceil_frac(Fraction(consumed) / state.util)
    state.serving = None
    state.consumed = 0
    return state
