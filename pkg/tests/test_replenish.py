from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ioamc.simulator import (
    BudgetError, MergePolicy, PibsState, ReplenishmentItem, ReplenishmentQueue,
    hi_server_adjust, lo_server_adjust, pibs_post, ss_consume_post,
)


def queue_of(pairs, max_length=8, usage=0):
    q = ReplenishmentQueue(0, max_length)
    q.items = [ReplenishmentItem(t, a) for t, a in pairs]
    q.usage = usage
    return q


def test_item_and_queue_validation():
    with pytest.raises(ValueError):
        ReplenishmentItem(0, 0)
    with pytest.raises(ValueError):
        ReplenishmentQueue(4, 0)
    assert ReplenishmentQueue(0).items == []


def test_single_run_posts_one_item():
    q = ReplenishmentQueue(4, 3)
    assert ss_consume_post(q, 9, 10, 16) == [("post", 25, 1)]
    assert q.as_pairs() == [(9, 3), (25, 1)]


def test_full_capacity_run():
    q = ReplenishmentQueue(8)
    ss_consume_post(q, 0, 8, 16)
    assert q.as_pairs() == [(16, 8)]
    assert q.available(15) == 0 and q.available(16) == 8


def test_full_list_merges_into_next_item():
    q = ReplenishmentQueue(4, 3)
    ss_consume_post(q, 9, 10, 16)
    ss_consume_post(q, 11, 12, 16)
    events = ss_consume_post(q, 13, 14, 16)
    assert events == [("merge", 25, 1), ("post", 29, 1)]
    assert q.as_pairs() == [(25, 2), (27, 1), (29, 1)]
    assert q.available(15) == 0
    assert q.next_time_after(15) == 25


def test_merge_tail_keeps_the_head():
    q = ReplenishmentQueue(4, 3, MergePolicy.MERGE_TAIL)
    for a in (9, 11, 13):
        ss_consume_post(q, a, a + 1, 16)
    assert q.as_pairs() == [(13, 1), (25, 1), (29, 2)]
    assert q.available(15) == 1


def test_consume_beyond_available():
    q = ReplenishmentQueue(4)
    q.activate(0)
    with pytest.raises(BudgetError):
        q.consume(5, 0)
    with pytest.raises(BudgetError):
        ss_consume_post(queue_of([(10, 4)]), 5, 6, 16)


def test_post_without_usage_is_noop():
    q = ReplenishmentQueue(4)
    assert q.post(0, 16) == []
    assert q.as_pairs() == [(0, 4)]


def test_activate_collapses_eligible_items():
    q = queue_of([(0, 1), (3, 2), (9, 1)])
    q.activate(5)
    assert q.as_pairs() == [(5, 3), (9, 1)]


# Mode change: HI servers


def test_hi_adjust_eligible_head():
    q = queue_of([(0, 23_000)])
    hi_server_adjust(q, 5, 23_000, 40_000)
    assert q.as_pairs() == [(0, 40_000)]


def test_hi_adjust_prepends_when_head_in_future():
    q = queue_of([(50, 23)])
    hi_server_adjust(q, 10, 23, 40)
    assert q.as_pairs() == [(10, 17), (50, 23)]


def test_hi_adjust_full_list_adds_to_head():
    q = queue_of([(50, 10), (60, 13)], max_length=2)
    hi_server_adjust(q, 10, 23, 40)
    assert q.as_pairs() == [(50, 27), (60, 13)]


def test_hi_adjust_empty_queue_and_no_gap():
    q = queue_of([])
    hi_server_adjust(q, 7, 2, 5)
    assert q.as_pairs() == [(7, 3)]
    q = queue_of([(0, 4)])
    hi_server_adjust(q, 7, 4, 4)
    assert q.as_pairs() == [(0, 4)]


# Mode change: surviving LO servers


def test_lo_adjust_untouched_head():
    q = queue_of([(0, 10)])
    lo_server_adjust(q, 5, 100, 100, 10, 1)
    assert q.as_pairs() == [(0, 1)]


def test_lo_adjust_head_usage_repost_then_tail_strip():
    # Head (0,5) has 2 used: 3 unused ticks go, the used 2 return at 0+T,
    # and the last tick comes off the tail.
    q = queue_of([(0, 5)], usage=2)
    lo_server_adjust(q, 5, 100, 100, 5, 1)
    assert q.as_pairs() == [(100, 1)]
    assert q.usage == 0


def test_lo_adjust_head_usage_with_spare_budget():
    q = queue_of([(0, 10)], usage=2)
    lo_server_adjust(q, 3, 100, 100, 10, 5)
    assert q.as_pairs() == [(0, 5)]
    assert q.usage == 2


def test_lo_adjust_walk_stops_at_partly_used_head():
    # (30,2) goes first, then 2 of the head's 3 unused ticks.
    q = queue_of([(0, 4), (30, 2), (120, 1)], usage=1)
    lo_server_adjust(q, 5, 50, 100, 7, 3)
    assert q.as_pairs() == [(0, 2), (120, 1)]
    assert q.usage == 1


def test_lo_adjust_repost_sorted_among_later_items():
    # Both unused head ticks go; the used tick returns at 0+T, before (120,1).
    q = queue_of([(0, 3), (120, 1)], usage=1)
    lo_server_adjust(q, 5, 50, 100, 4, 2)
    assert q.as_pairs() == [(100, 1), (120, 1)]
    assert q.usage == 0


def test_lo_adjust_walks_back_then_strips_tail():
    q = queue_of([(0, 2), (10, 3), (40, 5)])
    lo_server_adjust(q, 5, 16, 32, 10, 3)
    assert q.as_pairs() == [(40, 3)]


def test_lo_adjust_tail_strip_only():
    q = queue_of([(20, 3), (30, 4)])
    lo_server_adjust(q, 5, 20, 32, 7, 2)
    assert q.as_pairs() == [(20, 2)]


def test_lo_adjust_partial_last_item_before_deadline():
    q = queue_of([(0, 2), (10, 6), (40, 2)])
    lo_server_adjust(q, 5, 16, 32, 10, 6)
    assert q.as_pairs() == [(0, 2), (10, 2), (40, 2)]


# PIBS


def test_pibs_post_examples():
    st_ = PibsState(Fraction(1, 4))
    st_.begin(9, "tau1", 16)
    assert st_.budget == 4
    assert pibs_post(st_, 9, 1).eligible_at == 13
    st_.begin(13, "tau1", 16)
    assert pibs_post(st_, 13, 3).eligible_at == 25
    assert not st_.in_run


def test_pibs_post_rounds_up():
    st_ = PibsState(Fraction(1, 3))
    st_.begin(0, "s", 10)
    assert st_.budget == 3
    assert pibs_post(st_, 0, 2).eligible_at == 6
    st_ = PibsState(Fraction(2, 7))
    st_.begin(0, "s", 20)
    assert pibs_post(st_, 0, 1).eligible_at == 4


def test_pibs_zero_util_and_overrun():
    st_ = PibsState(Fraction(0))
    assert pibs_post(st_, 5, 0).eligible_at == 5
    st_ = PibsState(Fraction(1, 4))
    st_.begin(0, "s", 16)
    with pytest.raises(BudgetError):
        pibs_post(st_, 0, 5)


# Properties


runs = st.lists(st.tuples(st.integers(0, 6), st.integers(1, 4)), min_size=1, max_size=25)


@given(st.integers(1, 12), st.integers(1, 5), st.sampled_from(list(MergePolicy)), runs)
def test_queue_conserves_capacity(cap, length, policy, plan):
    period = 16
    q = ReplenishmentQueue(cap, length, policy)
    now = 0
    for gap, want in plan:
        now += gap
        avail = q.available(now)
        if avail == 0:
            nxt = q.next_time_after(now)
            assert nxt is not None
            now = nxt
            avail = q.available(now)
        use = min(want, avail)
        ss_consume_post(q, now, now + use, period)
        now += use
        times = [t for t, _ in q.as_pairs()]
        assert q.total == cap
        assert len(q) <= length
        assert times == sorted(times)
        assert all(t <= now - use + period for t in times)


@given(st.lists(st.tuples(st.integers(0, 60), st.integers(1, 6)), min_size=1, max_size=6),
       st.integers(0, 20), st.integers(1, 80), st.integers(0, 30), st.data())
def test_lo_adjust_removes_exactly_the_reduction(pairs, now, deadline, cut, data):
    pairs = sorted(pairs)
    q = queue_of(pairs)
    if q.eligible(now) and pairs[0][0] <= now:
        q.activate(now)
        q.usage = data.draw(st.integers(0, q.head.amount))
    total = q.total
    c_lo = total
    c_hi = max(0, c_lo - cut)
    lo_server_adjust(q, now, deadline, 100, c_lo, c_hi)
    assert q.total == c_hi
    times = [t for t, _ in q.as_pairs()]
    assert times == sorted(times)
    assert q.usage == 0 or (q.head is not None and q.usage <= q.head.amount)


@given(st.lists(st.tuples(st.integers(0, 60), st.integers(1, 6)), max_size=4),
       st.integers(1, 4), st.integers(0, 30), st.integers(0, 10))
def test_hi_adjust_adds_exactly_the_gap(pairs, length, now, extra):
    pairs = sorted(pairs)[:length]
    q = queue_of(pairs, max_length=length)
    before = q.total
    hi_server_adjust(q, now, 5, 5 + extra)
    assert q.total == before + extra
    assert len(q) <= length
    assert q.eligible(now) >= (extra if extra and (not pairs or len(pairs) < length
                                                   or pairs[0][0] <= now) else 0)
