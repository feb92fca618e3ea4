"""Next slot, cyclically after ``t``, whose rank falls in ``[r1, r2]``.

Three interchangeable strategies are provided:

* ``next_slot_naive`` scans the following slots one by one; cheap when the
  interval covers a large fraction of the ranks.
* ``next_slot_reverse`` maps every rank of the interval to its slot and picks
  the nearest successor of ``t``; cheap when the interval is narrow.
* ``next_slot_polylog`` walks down the levels of the implicit search tree and
  needs O(k) steps regardless of the interval.

``next_slot`` picks one of them by interval density and width.  All return the
same slot for every valid query.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .bitrev import (
    DomainError,
    _check_interval,
    _check_value,
    _max_rev,
    _min_rev,
    _rev,
    _TABLE_MAX_K,
    rev_bits_array,
    rev_table,
)

# dispatcher thresholds
NAIVE_MAX_DENSITY = 128  # use naive when 2**k / width <= this
REVERSE_MAX_WIDTH = 64  # else reverse when width <= this

STRATEGIES = ("naive", "reverse", "polylog", "auto")


@dataclass(frozen=True)
class SlotQuery:
    k: int
    t: int
    r1: int
    r2: int

    def __post_init__(self) -> None:
        _check_query(self.k, self.t, self.r1, self.r2)

    def solve(self, strategy: str = "auto") -> int:
        try:
            fn = _DISPATCH[strategy]
        except KeyError:
            raise DomainError(f"unknown strategy {strategy!r}") from None
        return fn(self.k, self.t, self.r1, self.r2)

    def distance(self, slot: int) -> int:
        """Cyclic distance ``d`` in ``[1, 2**k]`` from ``t`` to ``slot``."""
        return cyclic_distance(self.k, self.t, slot)


def _check_query(k: int, t: int, r1: int, r2: int) -> None:
    _check_value(k, t, "t")
    _check_interval(k, r1, r2)


def cyclic_distance(k: int, t: int, slot: int) -> int:
    n = 1 << k
    return (slot - t - 1) % n + 1


# scans longer than this switch from a Python loop to numpy chunks
_SCALAR_SCAN = 128


def next_slot_naive(k: int, t: int, r1: int, r2: int) -> int:
    _check_query(k, t, r1, r2)
    n = 1 << k
    mask = n - 1
    table = rev_table(k) if k <= _TABLE_MAX_K else None
    first = min(n, _SCALAR_SCAN if table is not None else _SCALAR_SCAN // 4)
    for d in range(1, first + 1):
        s = (t + d) & mask
        rank = table[s] if table is not None else _rev(k, s)
        if r1 <= rank <= r2:
            return s
    # first chunk about one expected gap between hits long
    d, chunk = first + 1, max(8 * _SCALAR_SCAN, n // (r2 - r1 + 1))
    while d <= n:
        hi = min(n + 1, d + chunk)
        slots = np.arange(t + d, t + hi, dtype=np.uint64) & np.uint64(mask)
        ranks = rev_bits_array(k, slots)
        # unsigned wrap-around turns r1 <= rank <= r2 into a single compare
        hit = np.flatnonzero((ranks - np.uint64(r1)) <= np.uint64(r2 - r1))
        if hit.size:
            return int(slots[hit[0]])
        d, chunk = hi, chunk * 2
    raise AssertionError("non-empty interval always has a slot")


def next_slot_reverse(k: int, t: int, r1: int, r2: int) -> int:
    _check_query(k, t, r1, r2)
    if r2 - r1 >= _SCALAR_SCAN:
        slots = rev_bits_array(k, np.arange(r1, r2 + 1, dtype=np.uint64))
        # cyclic distance minus one; t itself comes last, at distance 2**k
        dist = (slots + np.uint64((1 << k) - t - 1)) & np.uint64((1 << k) - 1)
        return int(slots[np.argmin(dist)])
    if k <= _TABLE_MAX_K:
        slots = sorted(rev_table(k)[r1 : r2 + 1])
    else:
        slots = sorted(_rev(k, x) for x in range(r1, r2 + 1))
    # nearest successor strictly after t; t itself only after a full round
    i = bisect_right(slots, t)
    return slots[i] if i < len(slots) else slots[0]


def _first_level(k: int, lo_level: int, r1: int, r2: int) -> tuple[int, int, int]:
    """Smallest level ``l >= lo_level`` holding a rank in ``[r1, r2]``.

    Returns ``(l, minL, maxL)`` with the in-level coordinate range of the
    intersection.  Levels below 1 are never asked for.
    """
    for l in range(max(lo_level, 1), k + 1):
        base = 1 << (k - l)
        step = base << 1
        # ceil((r1 - base) / step), clamped for r1 < base
        min_l = (r1 - base + step - 1) // step if r1 > base else 0
        if r2 < base:
            continue
        max_l = (r2 - base) // step
        if min_l <= max_l:
            return l, min_l, max_l
    raise AssertionError(f"no level >= {lo_level} meets [{r1}, {r2}] (k={k})")


def _polylog(k: int, t: int, r1: int, r2: int) -> tuple[int, int]:
    """Unchecked polylog search; returns ``(slot, outer_iterations)``."""
    offset = 0
    iterations = 0
    top = True
    while True:
        iterations += 1
        # drop the rank being received right now unless it is all we have
        if r1 < r2:
            rt = _rev(k, t)
            if rt == r1:
                r1 += 1
            elif rt == r2:
                r2 -= 1
        if r1 == r2:
            return offset + _rev(k, r1), iterations

        t_first = _min_rev(k, r1, r2)
        if t < t_first:
            return offset + t_first, iterations
        t_last = _max_rev(k, r1, r2)
        if t_last <= t:
            # only reachable in the outermost round: wrap to the next round
            assert top
            return offset + t_first, iterations

        # tFirst <= t < tLast; t >= 1 here since slot 0 was stripped above
        l, min_l, max_l = _first_level(k, t.bit_length(), r1, r2)
        above = 1 << (l - 1)
        t_first_l = _min_rev(l - 1, min_l, max_l)
        if t < above + t_first_l:
            return offset + above + t_first_l, iterations
        t_last_l = _max_rev(l - 1, min_l, max_l)
        if t >= above + t_last_l:
            l1, min_l1, max_l1 = _first_level(k, l + 1, r1, r2)
            return offset + (1 << (l1 - 1)) + _min_rev(l1 - 1, min_l1, max_l1), iterations

        # recurse into level l, itself a bit-reversed round of 2**(l-1) slots
        offset += above
        k, t, r1, r2 = l - 1, t - above, min_l, max_l
        top = False


def next_slot_polylog(k: int, t: int, r1: int, r2: int) -> int:
    _check_query(k, t, r1, r2)
    return _polylog(k, t, r1, r2)[0]


def polylog_iterations(k: int, t: int, r1: int, r2: int) -> int:
    """Number of outer loop iterations the polylog strategy needs (<= k + 1)."""
    _check_query(k, t, r1, r2)
    return _polylog(k, t, r1, r2)[1]


def choose_strategy(k: int, r1: int, r2: int) -> str:
    width = r2 - r1 + 1
    if (1 << k) <= NAIVE_MAX_DENSITY * width:
        return "naive"
    if width <= REVERSE_MAX_WIDTH:
        return "reverse"
    return "polylog"


def next_slot(k: int, t: int, r1: int, r2: int) -> int:
    """First slot cyclically after ``t`` with rank in ``[r1, r2]``, by the cheapest strategy."""
    return _DISPATCH[choose_strategy(k, r1, r2)](k, t, r1, r2)


_DISPATCH = {
    "naive": next_slot_naive,
    "reverse": next_slot_reverse,
    "polylog": next_slot_polylog,
    "auto": next_slot,
}
