"""On-air message layout.

All integers little-endian::

    offset size field
    0      4    sequence_id          (0 = invalid)
    4      1    log_sequence_length  k
    5      4    time_slot_length     milliseconds
    9      8    key
    17     8    rank                 < 2**k
    25     2    payload_len          <= 1024
    27     n    payload
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

from ..bitrev import MAX_K, rev_bits

WIRE_VERSION = 1
HEADER = struct.Struct("<IBIQQH")
HEADER_SIZE = HEADER.size  # 27
MAX_PAYLOAD = 1024


class EncodeError(ValueError):
    pass


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class RboMessage:
    sequence_id: int
    log_sequence_length: int
    time_slot_length: int
    key: int
    rank: int
    payload: bytes = b""

    @property
    def bad(self) -> bool:
        """True for the reserved invalid sequence id 0."""
        return self.sequence_id == 0

    @property
    def slot(self) -> int:
        return rev_bits(self.log_sequence_length, self.rank)


def _validate(m: RboMessage, exc: type[ValueError]) -> None:
    if not 0 <= m.sequence_id < 1 << 32:
        raise exc(f"sequence_id {m.sequence_id} does not fit 32 bits")
    if not 1 <= m.log_sequence_length <= MAX_K:
        raise exc(f"log_sequence_length {m.log_sequence_length} outside [1, {MAX_K}]")
    if not 0 <= m.time_slot_length < 1 << 32:
        raise exc(f"time_slot_length {m.time_slot_length} does not fit 32 bits")
    if not 0 <= m.key < 1 << 64:
        raise exc(f"key {m.key} does not fit 64 bits")
    if not 0 <= m.rank < 1 << m.log_sequence_length:
        raise exc(f"rank {m.rank} overflows 2**{m.log_sequence_length}")
    if len(m.payload) > MAX_PAYLOAD:
        raise exc(f"payload of {len(m.payload)} bytes exceeds {MAX_PAYLOAD}")


def encode_message(m: RboMessage) -> bytes:
    _validate(m, EncodeError)
    header = HEADER.pack(
        m.sequence_id,
        m.log_sequence_length,
        m.time_slot_length,
        m.key,
        m.rank,
        len(m.payload),
    )
    return header + bytes(m.payload)


def decode_message(data: bytes) -> RboMessage:
    """Parse one datagram.  A zero sequence id decodes; check ``.bad``."""
    if len(data) < HEADER_SIZE:
        raise DecodeError(f"truncated header: {len(data)} < {HEADER_SIZE} bytes")
    seq, k, slot_len, key, rank, plen = HEADER.unpack_from(data)
    if len(data) - HEADER_SIZE != plen:
        raise DecodeError(f"payload length {plen} but {len(data) - HEADER_SIZE} bytes follow")
    m = RboMessage(seq, k, slot_len, key, rank, bytes(data[HEADER_SIZE:]))
    _validate(m, DecodeError)
    return m
