"""Sender side: sort, pad to a power of two, emit one message per slot."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from ..bitrev import MAX_K, DomainError, rev_bits
from .wire import RboMessage


@dataclass(frozen=True)
class BroadcastSchedule:
    sequence_id: int
    k: int
    slot_length_ms: int
    entries: tuple[tuple[Any, bytes], ...]

    def __post_init__(self) -> None:
        if len(self.entries) != 1 << self.k:
            raise DomainError(f"schedule needs {1 << self.k} entries, has {len(self.entries)}")
        keys = self.keys
        if any(b < a for a, b in zip(keys, keys[1:])):
            raise DomainError("schedule entries are not sorted by key")

    @property
    def keys(self) -> list[Any]:
        return [key for key, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def message(self, rank: int) -> RboMessage:
        key, payload = self.entries[rank]
        return RboMessage(self.sequence_id, self.k, self.slot_length_ms, key, rank, payload)


def padding_positions(n: int) -> list[int]:
    """Sorted positions whose items get a second copy to reach a power of two.

    The ``n' - n`` copies are spread evenly: position ``j * n // (n' - n)``.
    """
    k = max(1, (n - 1).bit_length())
    extra = (1 << k) - n
    return [j * n // extra for j in range(extra)]


def build_schedule(
    keyed_items: Iterable[tuple[Any, bytes]], sequence_id: int, slot_length_ms: int
) -> BroadcastSchedule:
    items = sorted(keyed_items, key=lambda kv: kv[0])
    n = len(items)
    if n == 0:
        raise DomainError("nothing to broadcast")
    if n > 1 << MAX_K:
        raise DomainError(f"{n} items exceed 2**{MAX_K}")
    if sequence_id == 0:
        raise DomainError("sequence_id 0 is reserved")
    k = max(1, (n - 1).bit_length())
    doubled = set(padding_positions(n))
    entries: list[tuple[Any, bytes]] = []
    for i, item in enumerate(items):
        entries.append(item)
        if i in doubled:
            entries.append(item)
    return BroadcastSchedule(sequence_id, k, slot_length_ms, tuple(entries))


def slot_message(s: BroadcastSchedule, global_slot: int) -> RboMessage:
    """Message on air in ``global_slot`` (counted from the start of round 0)."""
    return s.message(rev_bits(s.k, global_slot % (1 << s.k)))
