"""Receiver state machine.

The machine never touches a radio or a clock.  Each command or event handler
returns a list of effects (switch the radio, arm or cancel a timer, report to
the user) which the surrounding event loop carries out.  Radio switching is
split-phase: after a ``RadioOn``/``RadioOff`` effect the loop must answer with
``radio_done``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Union

from ..bitrev import DomainError, rev_bits
from ..nextslot import next_slot
from .wire import RboMessage


class State(enum.Enum):
    IDLE = "IDLE"
    LISTENING = "LISTENING"
    SLEEPING = "SLEEPING"


class Timer(enum.Enum):
    TIMEOUT = "timeout"
    SLEEPING = "sleeping"


class Radio(enum.Enum):
    OFF = "off"
    STARTING = "starting"
    ON = "on"
    STOPPING = "stopping"


class Status(enum.Enum):
    SUCCESS = "SUCCESS"
    KEY_NOT_PRESENT = "KEY_NOT_PRESENT"
    TIMEOUT = "TIMEOUT"
    BAD_MESSAGE = "BAD_MESSAGE"
    FAILED_RADIO = "FAILED_RADIO"


@dataclass(frozen=True)
class RadioOn:
    pass


@dataclass(frozen=True)
class RadioOff:
    pass


@dataclass(frozen=True)
class ArmTimer:
    timer: Timer
    delay_ms: int


@dataclass(frozen=True)
class CancelTimer:
    timer: Timer


@dataclass(frozen=True)
class SearchDone:
    message: RboMessage | None
    status: Status


Effect = Union[RadioOn, RadioOff, ArmTimer, CancelTimer, SearchDone]


@dataclass(frozen=True)
class ProtocolConfig:
    """Timing knobs of the receiver.

    A sleep of ``remaining`` ms is shortened by ``remaining // d`` (clock
    drift) and by ``time_margin_ms`` (radio start-up and processing delay).
    ``d = None`` drops the drift margin.  Shorter gaps than
    ``min_sleeping_time_ms`` are spent listening.
    """

    time_margin_ms: int = 5
    relative_margin_divisor: int | None = 64
    min_sleeping_time_ms: int = 200
    timeout_ms: int = 800

    def __post_init__(self) -> None:
        d = self.relative_margin_divisor
        if d is not None and (d <= 0 or d & (d - 1)):
            raise DomainError(f"relative margin divisor {d} is not a power of two")
        if self.time_margin_ms < 0 or self.min_sleeping_time_ms < 0 or self.timeout_ms <= 0:
            raise DomainError("negative margin or non-positive timeout")

    @classmethod
    def for_slot_length(cls, slot_ms: int, **overrides: int) -> "ProtocolConfig":
        defaults = dict(min_sleeping_time_ms=2 * slot_ms, timeout_ms=8 * slot_ms)
        defaults.update(overrides)
        return cls(**defaults)

    def sleep_duration(self, remaining_ms: int) -> int:
        d = self.relative_margin_divisor
        relative = remaining_ms >> (d.bit_length() - 1) if d else 0
        return remaining_ms - relative - self.time_margin_ms


@dataclass
class ReceiverFsm:
    config: ProtocolConfig = field(default_factory=ProtocolConfig)
    state: State = State.IDLE
    searched_key: Any = None
    sequence_id: int = 0
    log_sequence_length: int = 0
    min_rank: int = 0
    max_rank: int = 0
    radio: Radio = Radio.OFF
    armed: set[Timer] = field(default_factory=set)
    # diagnostics of the last handled message
    last_next_slot: int | None = None
    last_remaining_ms: int | None = None
    last_rx_ms: float | None = None

    # -- transitions -------------------------------------------------------

    def _arm(self, timer: Timer, delay_ms: int) -> list[Effect]:
        self.armed.add(timer)
        return [ArmTimer(timer, delay_ms)]

    def _cancel(self, timer: Timer) -> list[Effect]:
        if timer not in self.armed:
            return []
        self.armed.discard(timer)
        return [CancelTimer(timer)]

    def _to_listening(self) -> list[Effect]:
        fx = self._cancel(Timer.SLEEPING)
        fx += self._arm(Timer.TIMEOUT, self.config.timeout_ms)
        if self.radio in (Radio.OFF, Radio.STOPPING):
            self.radio = Radio.STARTING
            fx.append(RadioOn())
        self.state = State.LISTENING
        return fx

    def _radio_off(self) -> list[Effect]:
        if self.radio in (Radio.ON, Radio.STARTING):
            self.radio = Radio.STOPPING
            return [RadioOff()]
        return []

    def _to_sleeping(self, duration_ms: int) -> list[Effect]:
        fx = self._cancel(Timer.TIMEOUT)
        fx += self._arm(Timer.SLEEPING, duration_ms)
        fx += self._radio_off()
        self.state = State.SLEEPING
        return fx

    def _to_idle(self) -> list[Effect]:
        fx = self._cancel(Timer.TIMEOUT) + self._cancel(Timer.SLEEPING)
        fx += self._radio_off()
        self.state = State.IDLE
        return fx

    def _done(self, message: RboMessage | None, status: Status) -> list[Effect]:
        return self._to_idle() + [SearchDone(message, status)]

    # -- user commands -----------------------------------------------------

    def search(self, key: Any) -> list[Effect]:
        # keep whichever bound is still valid for the new key
        if self.searched_key is not None:
            if key < self.searched_key:
                self.min_rank = 0
            elif key > self.searched_key:
                self.max_rank = (1 << self.log_sequence_length) - 1
        self.searched_key = key
        return self._to_listening()

    def stop(self) -> list[Effect]:
        return self._to_idle()

    def reset(self) -> list[Effect]:
        fx = self._to_idle()
        self.sequence_id = 0
        return fx

    # -- events ------------------------------------------------------------

    def received(self, m: RboMessage, now_ms: float | None = None) -> list[Effect]:
        if self.state is not State.LISTENING:
            return []
        self.last_rx_ms = now_ms
        self.last_next_slot = self.last_remaining_ms = None
        fx = self._cancel(Timer.TIMEOUT)
        if m.sequence_id == 0:
            return fx + self._done(m, Status.BAD_MESSAGE)
        if m.sequence_id != self.sequence_id or m.log_sequence_length != self.log_sequence_length:
            self.sequence_id = m.sequence_id
            self.log_sequence_length = m.log_sequence_length
            self.min_rank = 0
            self.max_rank = (1 << m.log_sequence_length) - 1
        if m.key == self.searched_key:
            return fx + self._done(m, Status.SUCCESS)
        if m.key > self.searched_key and m.rank <= self.max_rank:
            self.max_rank = m.rank - 1
        elif m.key < self.searched_key and m.rank >= self.min_rank:
            self.min_rank = m.rank + 1
        if self.min_rank > self.max_rank:
            return fx + self._done(m, Status.KEY_NOT_PRESENT)

        k = m.log_sequence_length
        now = rev_bits(k, m.rank)
        nxt = next_slot(k, now, self.min_rank, self.max_rank)
        slots_to_next = nxt - now if now < nxt else (1 << k) - now + nxt
        remaining = slots_to_next * m.time_slot_length
        self.last_next_slot, self.last_remaining_ms = nxt, remaining
        duration = self.config.sleep_duration(remaining)
        if remaining >= self.config.min_sleeping_time_ms and duration > 0:
            return fx + self._to_sleeping(duration)
        return fx + self._arm(Timer.TIMEOUT, self.config.timeout_ms)

    def timer_fired(self, which: Timer) -> list[Effect]:
        if which not in self.armed:
            return []  # cancelled or never armed
        self.armed.discard(which)
        if which is Timer.TIMEOUT and self.state is State.LISTENING:
            return self._done(None, Status.TIMEOUT)
        if which is Timer.SLEEPING and self.state is State.SLEEPING:
            return self._to_listening()
        return []

    def radio_done(self, on: bool, ok: bool = True) -> list[Effect]:
        """Completion of a split-phase radio switch."""
        expected = Radio.STARTING if on else Radio.STOPPING
        if self.radio is not expected:
            return []  # superseded by a later request
        if ok:
            self.radio = Radio.ON if on else Radio.OFF
            return []
        self.radio = Radio.OFF if on else Radio.ON
        if self.state is State.IDLE:
            return []
        return self._done(None, Status.FAILED_RADIO)

    @property
    def interval(self) -> tuple[int, int]:
        return self.min_rank, self.max_rank

    def check_invariants(self) -> None:
        want = {
            State.IDLE: set(),
            State.LISTENING: {Timer.TIMEOUT},
            State.SLEEPING: {Timer.SLEEPING},
        }[self.state]
        if self.armed != want:
            raise AssertionError(f"{self.state.name} with timers {self.armed}")


def fsm_search(fsm: ReceiverFsm, key: Any) -> list[Effect]:
    return fsm.search(key)


def fsm_stop(fsm: ReceiverFsm) -> list[Effect]:
    return fsm.stop()


def fsm_reset(fsm: ReceiverFsm) -> list[Effect]:
    return fsm.reset()


def fsm_received(fsm: ReceiverFsm, m: RboMessage, now_ms: float | None = None) -> list[Effect]:
    return fsm.received(m, now_ms)


def fsm_timer_fired(fsm: ReceiverFsm, which: Timer) -> list[Effect]:
    return fsm.timer_fired(which)
