"""Random task-set generation: UUnifast utilizations, log-uniform periods."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from .model import HI, LO, Pibs, SporadicServer, TaskSet, ceil_frac

RESOLUTION = 10 ** 6


@dataclass(frozen=True)
class GenParams:
    """Generation parameters; the defaults are the study's standard setup.

    Periods are drawn in ``period_range`` and multiplied by ``period_scale``
    ticks. With ``extended`` set, LO servers keep ``C_lo / CF`` in HI mode
    and LO PIBS keep ``U_lo / CF``; otherwise both are dropped in HI mode.
    """

    n_main: int = 15
    n_io: int = 5
    total_util: Fraction = Fraction(1, 2)
    io_total_util: Fraction = Fraction(1, 20)
    crit_factor: Fraction = Fraction(2)
    p_hi: float = 0.5
    period_range: tuple = (1, 100)
    period_scale: int = 1000
    seed: int = 1
    extended: bool = False

    def __post_init__(self):
        for name in ("total_util", "io_total_util", "crit_factor"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.n_main < 1 or self.n_io < 0:
            raise ValueError("need at least one main task")
        if self.n_io and not self.io_total_util < self.total_util:
            raise ValueError("io_total_util must be below total_util")
        if self.crit_factor < 1:
            raise ValueError("crit_factor must be >= 1")
        if not 0 <= self.p_hi <= 1:
            raise ValueError("p_hi must be a probability")
        lo, hi = self.period_range
        if not 0 < lo <= hi:
            raise ValueError("bad period range")

    @property
    def main_util(self) -> Fraction:
        return self.total_util - (self.io_total_util if self.n_io else 0)


def _shares(n: int, rng: random.Random) -> list:
    """UUnifast split of 1 into n parts (floats)."""
    out = []
    left = 1.0
    for i in range(1, n):
        nxt = left * rng.random() ** (1.0 / (n - i))
        out.append(left - nxt)
        left = nxt
    out.append(left)
    return out


def _scale_shares(shares: Sequence[float], total: Fraction, resolution: int) -> list:
    total = Fraction(total)
    if len(shares) == 1:
        return [total]
    out = [Fraction(max(1, math.floor(Fraction(s) * total * resolution)), resolution)
           for s in shares[:-1]]
    last = total - sum(out)
    if last <= 0:
        raise ValueError("utilization too small for the requested resolution")
    return out + [last]


def uunifast(n: int, total, rng: random.Random, resolution: int = RESOLUTION) -> list:
    """n positive utilizations summing exactly to ``total``.

    Each part is floored to ``1/resolution`` and the last absorbs the
    residue. Scaling ``total`` with the same rng state scales every part but
    the last monotonically.
    """
    if n < 1:
        raise ValueError("n must be positive")
    total = Fraction(total)
    if not 0 < total <= 1:
        raise ValueError("total must lie in (0, 1]")
    return _scale_shares(_shares(n, rng), total, resolution)


def log_uniform_period(rng: random.Random, lo: float, hi: float, scale: int) -> int:
    return max(1, round(math.exp(rng.uniform(math.log(lo), math.log(hi))) * scale))


@dataclass
class _Draw:
    periods: list
    main_shares: list
    io_shares: list
    crit_main: list
    crit_io: list
    binding_picks: list


def _draw(p: GenParams, rng: random.Random, retries: int = 100) -> _Draw:
    lo, hi = p.period_range
    periods = [log_uniform_period(rng, lo, hi, p.period_scale) for _ in range(p.n_main)]
    main_shares = _shares(p.n_main, rng)
    io_shares = _shares(p.n_io, rng) if p.n_io else []
    for _ in range(retries):
        crit_main = [HI if rng.random() < p.p_hi else LO for _ in range(p.n_main)]
        crit_io = [HI if rng.random() < p.p_hi else LO for _ in range(p.n_io)]
        if all(c in crit_main for c in crit_io):
            break
    else:
        raise RuntimeError("could not draw a criticality assignment with matching servers")
    picks = [rng.random() for _ in range(p.n_io)]
    return _Draw(periods, main_shares, io_shares, crit_main, crit_io, picks)


def generate(params: GenParams, index: int = 0) -> TaskSet:
    """Generate one task set.

    The random stream depends only on ``params.seed ^ index`` (not on the
    utilization), so sets with the same index at different utilizations
    share periods, criticalities, bindings and utilization proportions.
    """
    p = params
    rng = random.Random(p.seed ^ index)
    d = _draw(p, rng)
    cf = p.crit_factor
    utils = _scale_shares(d.main_shares, p.main_util, RESOLUTION)
    servers = []
    for k in range(p.n_main):
        T = d.periods[k]
        c_lo = max(1, ceil_frac(utils[k] * T))
        if d.crit_main[k] == HI:
            c_hi = ceil_frac(cf * c_lo)
        elif p.extended:
            c_hi = math.floor(c_lo / cf) or None
        else:
            c_hi = None
        servers.append(SporadicServer(f"ss{k:02d}", T, c_lo, c_hi, d.crit_main[k]))
    pibs, bindings = [], {}
    io_utils = _scale_shares(d.io_shares, p.io_total_util, RESOLUTION) if p.n_io else []
    for q in range(p.n_io):
        crit = d.crit_io[q]
        same = [s for s in servers if s.crit == crit]
        host = same[min(len(same) - 1, int(d.binding_picks[q] * len(same)))]
        # whole ticks per period of the bound server
        ticks = max(1, round(io_utils[q] * host.period))
        u_lo = Fraction(ticks, host.period)
        if crit == HI:
            u_hi = min(Fraction(1), cf * u_lo)
        elif p.extended:
            u_hi = u_lo / cf
        else:
            u_hi = None
        pid = f"io{q:02d}"
        pibs.append(Pibs(pid, u_lo, u_hi, crit))
        bindings[pid] = host.id
    return TaskSet(servers, pibs, bindings)


def classic_view(ts: TaskSet) -> TaskSet:
    """Drop every HI-mode allowance of LO servers and LO PIBS."""
    servers = [s if s.crit == HI else replace(s, capacity_hi=None) for s in ts.servers]
    pibs = [q if q.crit == HI else replace(q, util_hi=None) for q in ts.pibs]
    return TaskSet(servers, pibs, ts.bindings)


def pibs_to_ss(ts: TaskSet) -> TaskSet:
    """Replace every bound PIBS by a server with the bound server's period.

    The new server is named ``<server>.<pibs>`` so that rate-monotonic order
    places it right after its host. ``C = ceil(U * T)`` in each mode.
    """
    servers = [replace(s, priority=None) for s in ts.servers]
    for q in ts.pibs:
        if q.id not in ts.bindings:
            raise ValueError(f"PIBS {q.id!r} is not bound to a server")
        host = ts.server(ts.bindings[q.id])
        T = host.period
        c_lo = ceil_frac(q.util_lo * T)
        c_hi: Optional[int] = None
        if q.util_hi is not None and (q.crit == HI or q.util_hi > 0):
            c_hi = ceil_frac(q.util_hi * T)
            if q.crit == LO:
                c_hi = min(c_hi, c_lo) or None
        servers.append(SporadicServer(f"{host.id}.{q.id}", T, c_lo, c_hi, q.crit))
    return TaskSet(servers, (), {})
