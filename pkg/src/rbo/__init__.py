"""Energy-efficient keyed broadcast over a bit-reversal schedule.

A sender broadcasts ``2**k`` messages sorted by key, rank ``x`` in slot
``rev_bits(k, x)``; a receiver locates any key with at most ``2k + 2``
receptions.
"""
from .bitrev import (
    DomainError,
    TreeIndex,
    bs_order,
    coordinate_in_level,
    level_of_rank,
    level_of_slot,
    max_rev_bits,
    min_rev_bits,
    rev_bits,
)
from .nextslot import (
    SlotQuery,
    next_slot,
    next_slot_naive,
    next_slot_polylog,
    next_slot_reverse,
)
from .search import (
    Absent,
    Continue,
    Found,
    RankInterval,
    SearchState,
    new_search,
    observe,
    run_reliable_trace,
)

__version__ = "0.1.0"
