"""Precomputed, integer-only view of a task set for the response-time solvers.

PIBS utilizations are rationals. Every term of a response-time sum is scaled
by ``S = L**2`` (``L`` the lcm of all utilization denominators) so the whole
sum is an integer and the single ceiling per iteration is exact.
"""

from __future__ import annotations

from math import lcm
from typing import Callable, Optional, Sequence

from .model import HI, LO, TaskSet, candidate_servers, ceil_div


def iterate(total: Callable[[int], int], seed: int, scale: int, deadline: int) -> Optional[int]:
    """Least fixed point of ``R = ceil(total(R) / scale)`` starting from ``seed``.

    ``total`` must be monotone non-decreasing. Returns None once R exceeds
    the deadline.
    """
    r = seed
    if r > deadline:
        return None
    while True:
        nxt = ceil_div(total(r), scale)
        if nxt > deadline:
            return None
        if nxt <= r:
            return r
        r = nxt


class Prepared:
    """Per-task-set arrays indexed by priority rank (0 = highest)."""

    def __init__(self, ts: TaskSet):
        self.ts = ts
        order = ts.by_priority()
        self.ids = [s.id for s in order]
        self.index = {sid: k for k, sid in enumerate(self.ids)}
        self.period = [s.period for s in order]
        self.c_lo = [s.capacity_lo for s in order]
        self.c_hi = [s.capacity_hi or 0 for s in order]
        self.crit = [s.crit for s in order]
        self.has_c_hi = [s.capacity_hi is not None for s in order]

        self.pids = [p.id for p in ts.pibs]
        self.pcrit = [p.crit for p in ts.pibs]
        dens = [p.util_lo.denominator for p in ts.pibs]
        dens += [p.util_hi.denominator for p in ts.pibs if p.util_hi is not None]
        self.L = lcm(*dens) if dens else 1
        self.S = self.L * self.L
        L = self.L
        self.u_lo = [p.util_lo.numerator * (L // p.util_lo.denominator) for p in ts.pibs]
        self.u_hi = [
            0 if p.util_hi is None else p.util_hi.numerator * (L // p.util_hi.denominator)
            for p in ts.pibs
        ]
        n = len(order)
        # hip(k) = ranks 0..k; hipH(k) = HI ranks < k plus k itself
        self._hip_periods = [sorted(set(self.period[: k + 1])) for k in range(n)]
        self._hipH_periods = [
            sorted({self.period[j] for j in range(k) if self.crit[j] == HI} | {self.period[k]})
            for k in range(n)
        ]

    def hp(self, k: int) -> range:
        return range(k)

    def hpH(self, k: int) -> list:
        return [j for j in range(k) if self.crit[j] == HI]

    def hpL(self, k: int) -> list:
        return [j for j in range(k) if self.crit[j] == LO]

    def hipH(self, k: int) -> list:
        return self.hpH(k) + [k]

    def hipL(self, k: int) -> list:
        return self.hpL(k) + ([k] if self.crit[k] == LO else [])

    def periods(self, k: int, high_only: bool = False) -> list:
        """Distinct periods of hip(k), or of hipH(k) when ``high_only``."""
        return self._hipH_periods[k] if high_only else self._hip_periods[k]

    def interference(self, t: int, periods: Sequence[int], u: int) -> int:
        """max over the given periods of the scaled PIBS interference bound.

        Scaled value of ``(1 + ceil(t/T) - U) * T * U`` with ``U = u / L``.
        """
        if u == 0:
            return 0
        if t < 0:
            t = 0
        L = self.L
        best = 0
        for T in periods:
            v = (L * (1 + ceil_div(t, T)) - u) * T
            if v > best:
                best = v
        return best * u

    def full_window(self, u: int, T: int) -> int:
        """Scaled ``(2 - U) * U * T``: most a PIBS can run in a window of T."""
        return (2 * self.L - u) * u * T

    def candidates(self, p: int, only=None) -> list:
        return [self.index[s] for s in candidate_servers(self.ts, self.pids[p], only)]
