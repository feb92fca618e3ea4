"""Bit-reversal permutation and binary-search-tree geometry over ranks and slots.

Ranks are positions in the sorted broadcast sequence, slots are positions in
one broadcast round.  For a round of length ``2**k`` the rank ``x`` is sent in
slot ``rev_bits(k, x)``; since the permutation is an involution the same call
maps a slot back to its rank.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_K = 63

# byte -> byte with the 8 bits mirrored
_BYTE_REV = bytes(int(f"{b:08b}"[::-1], 2) for b in range(256))

# full lookup tables are built lazily up to this width
_TABLE_MAX_K = 16


class DomainError(ValueError):
    """An argument lies outside the domain of a rank/slot function."""


def _check_k(k: int) -> None:
    if not 0 <= k <= MAX_K:
        raise DomainError(f"bit-width k={k} outside [0, {MAX_K}]")


def _check_value(k: int, x: int, what: str = "x") -> None:
    _check_k(k)
    if not 0 <= x < (1 << k):
        raise DomainError(f"{what}={x} outside [0, 2**{k})")


@dataclass(frozen=True)
class TreeIndex:
    """A ``k``-bit unsigned value (rank, slot, level or coordinate)."""

    k: int
    value: int

    def __post_init__(self) -> None:
        _check_value(self.k, self.value, "value")

    def reversed(self) -> "TreeIndex":
        return TreeIndex(self.k, rev_bits(self.k, self.value))


def rev_bits_loop(k: int, x: int) -> int:
    """Reference implementation: shift the low bit of ``x`` out ``k`` times."""
    _check_value(k, x)
    y = 0
    for _ in range(k):
        y = (y << 1) | (x & 1)
        x >>= 1
    return y


def _rev_bytes(k: int, x: int) -> int:
    y = 0
    nbytes = (k + 7) >> 3
    for _ in range(nbytes):
        y = (y << 8) | _BYTE_REV[x & 0xFF]
        x >>= 8
    return y >> ((nbytes << 3) - k)


_T16 = tuple(_rev_bytes(16, x) for x in range(1 << 16))


def _rev(k: int, x: int) -> int:
    # unchecked table reversal of the low k bits
    if k <= 16:
        return _T16[x] >> (16 - k)
    if k <= 32:
        return ((_T16[x & 0xFFFF] << 16) | _T16[x >> 16]) >> (32 - k)
    return _rev_bytes(k, x)


@lru_cache(maxsize=None)
def rev_table(k: int) -> tuple[int, ...]:
    """All of ``rev_bits(k, .)`` as a tuple; only for ``k <= 16``."""
    if not 0 <= k <= _TABLE_MAX_K:
        raise DomainError(f"no table for k={k}")
    if k == 16:
        return _T16
    return tuple(_rev(k, x) for x in range(1 << k))


_REV16 = np.array(_T16, dtype=np.uint64)
_M16 = np.uint64(0xFFFF)


def rev_bits_array(k: int, xs: np.ndarray) -> np.ndarray:
    """``rev_bits`` over a uint64 array of values already known to be < 2**k."""
    xs = xs.astype(np.uint64, copy=False)
    if k <= 16:
        return _REV16[xs] >> np.uint64(16 - k)
    low = _REV16[xs & _M16]
    if k <= 32:
        return ((low << np.uint64(16)) | _REV16[xs >> np.uint64(16)]) >> np.uint64(32 - k)
    full = (
        (low << np.uint64(48))
        | (_REV16[(xs >> np.uint64(16)) & _M16] << np.uint64(32))
        | (_REV16[(xs >> np.uint64(32)) & _M16] << np.uint64(16))
        | _REV16[xs >> np.uint64(48)]
    )
    return full >> np.uint64(64 - k)


def rev_bits(k: int, x: int) -> int:
    """Reverse the ``k``-bit binary representation of ``x``.

    >>> rev_bits(3, 1)
    4
    >>> rev_bits(4, 6)
    6
    """
    _check_value(k, x)
    return _rev(k, x)


def bs_order(k: int, x: int) -> int:
    """Binary search ordering: interior tree nodes first, then the odd ranks.

    Kept as a contrast baseline; the protocol itself only uses ``rev_bits``.
    """
    _check_value(k, x)
    # unfold bs_{j+1}(x) = bs_j(x//2) if x even else 2**j + x//2
    while k > 0:
        if x & 1:
            return (1 << (k - 1)) + (x >> 1)
        x >>= 1
        k -= 1
    return 0


def level_of_slot(t: int) -> int:
    """ceil(log2(t + 1)), the tree level of slot ``t``."""
    if t < 0:
        raise DomainError(f"slot {t} is negative")
    return t.bit_length()


def level_of_rank(k: int, x: int) -> int:
    return level_of_slot(rev_bits(k, x))


def coordinate_in_level(k: int, l: int, x: int) -> int:
    """Index of rank ``x`` among the ranks of level ``l``.

    Level ``l >= 1`` holds the ranks ``2**(k-l) + i * 2**(k-l+1)``; ``x`` must
    be one of them.
    """
    _check_value(k, x)
    if l == 0:
        if x != 0:
            raise DomainError(f"rank {x} is not on level 0")
        return 0
    if not 1 <= l <= k:
        raise DomainError(f"level {l} outside [0, {k}]")
    base = 1 << (k - l)
    if x < base or (x - base) % (base << 1):
        raise DomainError(f"rank {x} is not on level {l} (k={k})")
    return x >> (k - l + 1)


def _check_interval(k: int, r1: int, r2: int) -> None:
    _check_value(k, r1, "r1")
    _check_value(k, r2, "r2")
    if r1 > r2:
        raise DomainError(f"empty rank interval [{r1}, {r2}]")


def _min_rev(k: int, r1: int, r2: int) -> int:
    # descend from the root (rank 0) towards [r1, r2]; the first rank hit is
    # the highest tree node inside the interval, i.e. its earliest slot
    x = 0
    s = 1 << (k - 1) if k else 0
    while x < r1 or x > r2:
        if x < r1:
            x += s
        else:
            x -= s
        s >>= 1
    return _rev(k, x)


def _max_rev(k: int, r1: int, r2: int) -> int:
    # complementing every bit commutes with reversal: rev(m - x) = m - rev(x)
    m = (1 << k) - 1
    return m - _min_rev(k, m - r2, m - r1)


def min_rev_bits(k: int, r1: int, r2: int) -> int:
    """Earliest slot in a round whose rank lies in ``[r1, r2]``."""
    _check_interval(k, r1, r2)
    return _min_rev(k, r1, r2)


def max_rev_bits(k: int, r1: int, r2: int) -> int:
    """Latest slot in a round whose rank lies in ``[r1, r2]``."""
    _check_interval(k, r1, r2)
    return _max_rev(k, r1, r2)
