"""Slotted broadcast simulation with one sender and independent receivers.

The broadcast sequence is the virtual key list ``2 * rank`` for ``rank`` in
``[0, 2**k)``; a searched key ``2 * gap - 1`` is absent and would be inserted
before rank ``gap`` (``gap`` in ``[0, 2**k]``).

Each trial owns a numpy ``Generator`` seeded from a single integer.  Per-trial
seeds of an experiment are derived with ``numpy.random.SeedSequence``:
``SeedSequence(master_seed, spawn_key=(k, p_bits, trial_index))`` where
``p_bits`` is the IEEE-754 bit pattern of ``p``.  Trials therefore do not
depend on each other, on the order of ``p_list`` or on the worker count.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .bitrev import DomainError, _rev
from .nextslot import cyclic_distance, next_slot
from .protocol.receiver import (
    ArmTimer,
    CancelTimer,
    ProtocolConfig,
    Radio,
    RadioOff,
    RadioOn,
    ReceiverFsm,
    SearchDone,
    State,
    Status,
    Timer,
)
from .protocol.wire import RboMessage
from .search import Absent, Found, new_search, observe

MODES = ("bare", "fsm")
RETRY_POLICIES = ("in-interval", "immediate")
CSV_HEADER = ("k", "p", "trials", "mean_energy", "std_energy", "mean_slots", "seed")
CSV_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ChannelModel:
    p_success: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_success <= 1.0:
            raise DomainError(f"success probability {self.p_success} outside [0, 1]")

    def delivered(self, rng: np.random.Generator) -> bool:
        # p = 1 consumes no randomness
        return self.p_success >= 1.0 or rng.random() < self.p_success


@dataclass(frozen=True)
class TrialConfig:
    k: int
    seed: int = 0
    channel: ChannelModel = field(default_factory=ChannelModel)
    mode: str = "bare"
    retry_policy: str = "in-interval"
    # fixed scenario; drawn from the generator when None
    t0: int | None = None
    gap: int | None = None
    # full-fsm only
    skew: float = 0.0
    slot_ms: int = 100
    switch_latency_ms: float = 0.0
    protocol: ProtocolConfig | None = None
    max_rounds: int = 1000

    def __post_init__(self) -> None:
        if not 1 <= self.k <= 40:
            raise DomainError(f"k={self.k} outside [1, 40]")
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.retry_policy not in RETRY_POLICIES:
            raise DomainError(f"unknown retry policy {self.retry_policy!r}")
        if not 0.0 <= self.skew < 1.0:
            raise DomainError(f"clock skew {self.skew} outside [0, 1)")


@dataclass(frozen=True)
class TrialMetrics:
    receptions: int
    elapsed_slots: int
    outcome: str
    t0: int
    gap: int
    radio_on_ms: float = 0.0
    overhead_receptions: int = 0
    slots: tuple[int, ...] = ()


def _scenario(cfg: TrialConfig, rng: np.random.Generator) -> tuple[int, int]:
    n = 1 << cfg.k
    t0 = int(rng.integers(n)) if cfg.t0 is None else cfg.t0
    gap = int(rng.integers(n + 1)) if cfg.gap is None else cfg.gap
    if not 0 <= t0 < n or not 0 <= gap <= n:
        raise DomainError(f"start slot {t0} or gap {gap} out of range for k={cfg.k}")
    return t0, gap


def run_trial(cfg: TrialConfig) -> TrialMetrics:
    rng = np.random.default_rng(cfg.seed)
    if cfg.mode == "bare":
        return _run_bare(cfg, rng)
    return _run_fsm(cfg, rng)


def _run_bare(cfg: TrialConfig, rng: np.random.Generator) -> TrialMetrics:
    k = cfg.k
    mask = (1 << k) - 1
    t0, gap = _scenario(cfg, rng)
    state = new_search(k, 2 * gap - 1, t0)
    iv = state.interval
    t = (t0 + 1) & mask
    elapsed = 1
    energy = 0
    slots = []
    limit = cfg.max_rounds << k
    while True:
        energy += 1  # a listened slot costs energy whether or not it decodes
        slots.append(t)
        if cfg.channel.delivered(rng):
            rank = _rev(k, t)
            out = observe(state, 2 * rank, rank)
            if isinstance(out, Found):
                outcome = "found"
                break
            if isinstance(out, Absent):
                outcome = "absent"
                break
            nxt = out.next_slot
        elif cfg.retry_policy == "in-interval":
            nxt = next_slot(k, t, iv.minr, iv.maxr)
        else:
            nxt = (t + 1) & mask
        elapsed += cyclic_distance(k, t, nxt)
        t = nxt
        if elapsed > limit:
            outcome = "incomplete"
            break
    return TrialMetrics(energy, elapsed, outcome, t0, gap, slots=tuple(slots))


# event priorities at equal timestamps: radio completion, then timers, then
# the beacon, so a receiver waking exactly on a slot boundary hears it
_P_RADIO, _P_TIMER, _P_BEACON = 0, 1, 2
_OUTCOMES = {Status.SUCCESS: "found", Status.KEY_NOT_PRESENT: "absent"}


def _run_fsm(cfg: TrialConfig, rng: np.random.Generator) -> TrialMetrics:
    """Drive the receiver state machine against a simulated millisecond clock.

    Receiver timers run at ``rate`` times real speed, drawn once per trial from
    ``[1 - skew, 1 + skew]``.  ``receptions`` counts slots heard (or lost)
    while listening whose rank lay inside the receiver's interval;
    ``overhead_receptions`` counts the rest.
    """
    k = cfg.k
    n = 1 << k
    L = cfg.slot_ms
    t0, gap = _scenario(cfg, rng)
    key = 2 * gap - 1
    rate = 1.0 + cfg.skew * (2.0 * rng.random() - 1.0) if cfg.skew else 1.0
    fsm = ReceiverFsm(cfg.protocol or ProtocolConfig.for_slot_length(L))

    events: list[tuple[float, int, int, object]] = []
    seq = 0
    timer_gen = {Timer.TIMEOUT: 0, Timer.SLEEPING: 0}
    radio_on_at: float | None = None
    radio_ms = 0.0
    useful = overhead = 0
    rx_slots: list[int] = []
    status: Status | None = None
    final_slot = t0

    def push(at: float, prio: int, what: object) -> None:
        nonlocal seq
        seq += 1
        heapq.heappush(events, (at, prio, seq, what))

    def apply(fx: list, now: float) -> None:
        nonlocal radio_on_at, radio_ms, status
        for e in fx:
            if isinstance(e, ArmTimer):
                timer_gen[e.timer] += 1
                push(now + e.delay_ms / rate, _P_TIMER, (e.timer, timer_gen[e.timer]))
            elif isinstance(e, CancelTimer):
                timer_gen[e.timer] += 1
            elif isinstance(e, RadioOn):
                if radio_on_at is None:
                    radio_on_at = now
                push(now + cfg.switch_latency_ms, _P_RADIO, True)
            elif isinstance(e, RadioOff):
                if radio_on_at is not None:
                    radio_ms += now + cfg.switch_latency_ms - radio_on_at
                    radio_on_at = None
                push(now + cfg.switch_latency_ms, _P_RADIO, False)
            elif isinstance(e, SearchDone):
                status = e.status

    now = t0 * L + L / 2
    apply(fsm.search(key), now)
    push((t0 + 1) * L, _P_BEACON, t0 + 1)
    limit = t0 + cfg.max_rounds * n
    retries = 0
    while events:
        now, prio, _, what = heapq.heappop(events)
        if prio == _P_RADIO:
            apply(fsm.radio_done(bool(what)), now)
        elif prio == _P_TIMER:
            timer, gen = what
            if gen == timer_gen[timer]:
                apply(fsm.timer_fired(timer), now)
        else:
            s = what
            if s > limit:
                break
            push((s + 1) * L, _P_BEACON, s + 1)
            if fsm.state is State.LISTENING and fsm.radio is Radio.ON:
                rank = _rev(k, s & (n - 1))
                fresh = fsm.sequence_id != 1 or fsm.log_sequence_length != k
                if fresh or fsm.min_rank <= rank <= fsm.max_rank:
                    useful += 1
                else:
                    overhead += 1
                if cfg.channel.delivered(rng):
                    rx_slots.append(s & (n - 1))
                    apply(fsm.received(RboMessage(1, k, L, 2 * rank, rank), now), now)
                    final_slot = s
        if status is Status.TIMEOUT:
            # the user simply asks again; kept bounds make this cheap
            status = None
            retries += 1
            apply(fsm.search(key), now)
        elif status is not None:
            break
    if radio_on_at is not None:
        radio_ms += now - radio_on_at
    if status is None:
        outcome = "incomplete"
    else:
        outcome = _OUTCOMES.get(status, status.name.lower())
    return TrialMetrics(
        useful,
        final_slot - t0,
        outcome,
        t0,
        gap,
        radio_on_ms=radio_ms,
        overhead_receptions=overhead,
        slots=tuple(rx_slots),
    )


# -- experiments ------------------------------------------------------------


def trial_seed(master_seed: int, k: int, p: float, index: int) -> int:
    p_bits = struct.unpack("<Q", struct.pack("<d", float(p)))[0]
    ss = np.random.SeedSequence(master_seed, spawn_key=(k, p_bits, index))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentRow:
    k: int
    p: float
    trials: int
    mean_energy: float
    std_energy: float
    mean_slots: float
    std_slots: float
    seed: int

    def csv_fields(self) -> list[str]:
        return [
            str(self.k),
            repr(self.p),
            str(self.trials),
            repr(self.mean_energy),
            repr(self.std_energy),
            repr(self.mean_slots),
            str(self.seed),
        ]


def _mean_std(total: int, squares: int, n: int) -> tuple[float, float]:
    # exact integer moments keep the result independent of summation order
    mean = total / n
    if n < 2:
        return mean, 0.0
    var_num = n * squares - total * total
    return mean, math.sqrt(var_num / (n * (n - 1)))


def _run_chunk(args: tuple) -> tuple[int, int, int, int]:
    base, master_seed, start, stop = args
    e_sum = e_sq = s_sum = s_sq = 0
    for i in range(start, stop):
        cfg = replace(base, seed=trial_seed(master_seed, base.k, base.channel.p_success, i))
        m = run_trial(cfg)
        e_sum += m.receptions
        e_sq += m.receptions * m.receptions
        s_sum += m.elapsed_slots
        s_sq += m.elapsed_slots * m.elapsed_slots
    return e_sum, e_sq, s_sum, s_sq


def run_experiment(
    k_range: Iterable[int],
    p_list: Sequence[float],
    trials: int,
    master_seed: int,
    *,
    workers: int = 1,
    chunk: int = 1000,
    **trial_options,
) -> list[ExperimentRow]:
    """Mean energy and elapsed slots per ``(k, p)`` cell, rows in that order."""
    if trials < 1:
        raise DomainError("need at least one trial")
    cells = [(k, float(p)) for k in k_range for p in p_list]
    jobs = []
    for k, p in cells:
        base = TrialConfig(k=k, channel=ChannelModel(p), **trial_options)
        for start in range(0, trials, chunk):
            jobs.append((base, master_seed, start, min(trials, start + chunk)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]

    sums: dict[tuple[int, float], list[int]] = {c: [0, 0, 0, 0] for c in cells}
    for (base, *_), part in zip(jobs, parts):
        acc = sums[(base.k, base.channel.p_success)]
        for j, v in enumerate(part):
            acc[j] += v
    rows = []
    for k, p in cells:
        e_sum, e_sq, s_sum, s_sq = sums[(k, p)]
        me, se = _mean_std(e_sum, e_sq, trials)
        ms, ss = _mean_std(s_sum, s_sq, trials)
        rows.append(ExperimentRow(k, p, trials, me, se, ms, ss, master_seed))
    return rows


def rows_to_csv(rows: Iterable[ExperimentRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def metrics_dict(m: TrialMetrics) -> dict:
    d = asdict(m)
    d["slots"] = list(m.slots)
    return d
