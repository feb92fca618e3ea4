"""Receiver-side rank-interval search.

The receiver keeps ``[minr, maxr]``, the ranks where the searched key could
still sit.  Every received (key, rank) pair either is the searched key, or
moves one end of the interval past the received rank.  The receiver then
sleeps until the next slot carrying a rank inside the interval.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence, Union

from .bitrev import DomainError, _check_value, rev_bits
from .nextslot import cyclic_distance, next_slot


@dataclass
class RankInterval:
    minr: int
    maxr: int

    @property
    def empty(self) -> bool:
        return self.minr > self.maxr

    def __contains__(self, rank: int) -> bool:
        return self.minr <= rank <= self.maxr

    def __len__(self) -> int:
        return max(0, self.maxr - self.minr + 1)


@dataclass
class SearchState:
    k: int
    searched_key: Any
    interval: RankInterval
    receptions: int = 0
    last_slot: int | None = None


@dataclass(frozen=True)
class Found:
    rank: int
    message: Any = None


@dataclass(frozen=True)
class Absent:
    pass


@dataclass(frozen=True)
class Continue:
    next_slot: int


SearchOutcome = Union[Found, Absent, Continue]


def new_search(k: int, key: Any, start_slot: int) -> SearchState:
    _check_value(k, start_slot, "start_slot")
    return SearchState(k, key, RankInterval(0, (1 << k) - 1), 0, start_slot)


def observe(state: SearchState, m_key: Any, m_rank: int, message: Any = None) -> SearchOutcome:
    """Feed one received (key, rank) pair into the search.

    Ranks outside the interval leave it untouched; after losses the receiver
    may well hear such messages.
    """
    k = state.k
    _check_value(k, m_rank, "m_rank")
    state.receptions += 1
    slot = rev_bits(k, m_rank)
    state.last_slot = slot
    if m_key == state.searched_key:
        return Found(m_rank, message)
    iv = state.interval
    if m_key < state.searched_key and iv.minr <= m_rank:
        iv.minr = m_rank + 1
    if m_key > state.searched_key and iv.maxr >= m_rank:
        iv.maxr = m_rank - 1
    if iv.empty:
        return Absent()
    return Continue(next_slot(k, slot, iv.minr, iv.maxr))


@dataclass
class Trace:
    slots: list[int] = field(default_factory=list)
    outcome: SearchOutcome | None = None
    elapsed: int = 0

    @property
    def receptions(self) -> int:
        return len(self.slots)


def check_sorted_keys(k: int, keys: Sequence[Any]) -> None:
    if len(keys) != 1 << k:
        raise DomainError(f"need {1 << k} keys, got {len(keys)}")
    if any(b < a for a, b in zip(keys, keys[1:])):
        raise DomainError("keys are not sorted")


def run_reliable_trace(k: int, sorted_keys: Sequence[Any], key: Any, t0: int) -> Trace:
    """Loss-free search started just after slot ``t0``.

    Returns the used slots ``t_1 .. t_e`` together with the final outcome and
    the number of slots elapsed from ``t0`` to ``t_e``.
    """
    check_sorted_keys(k, sorted_keys)
    state = new_search(k, key, t0)
    trace = Trace()
    t = (t0 + 1) % (1 << k)
    trace.elapsed = 1
    while True:
        trace.slots.append(t)
        rank = rev_bits(k, t)
        outcome = observe(state, sorted_keys[rank], rank)
        if not isinstance(outcome, Continue):
            trace.outcome = outcome
            return trace
        trace.elapsed += cyclic_distance(k, t, outcome.next_slot)
        t = outcome.next_slot
