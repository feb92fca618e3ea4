import pytest
from hypothesis import given, settings, strategies as st

from rbo.bitrev import DomainError, rev_bits
from rbo.protocol import (
    HEADER_SIZE,
    MAX_PAYLOAD,
    ArmTimer,
    CancelTimer,
    DecodeError,
    EncodeError,
    ProtocolConfig,
    RadioOff,
    RadioOn,
    RboMessage,
    ReceiverFsm,
    SearchDone,
    State,
    Status,
    Timer,
    build_schedule,
    decode_message,
    encode_message,
    fsm_received,
    fsm_reset,
    fsm_search,
    fsm_stop,
    fsm_timer_fired,
    padding_positions,
    slot_message,
)

# -- wire -------------------------------------------------------------------


def test_golden_minimal_header():
    data = encode_message(RboMessage(1, 1, 0, 0, 0))
    assert len(data) == HEADER_SIZE == 27
    assert data == bytes.fromhex("0100000001") + bytes(22)


def test_golden_full_header():
    m = RboMessage(0x01020304, 5, 100, 0x1122334455667788, 17, b"hi")
    want = bytes.fromhex(
        "04030201" "05" "64000000" "8877665544332211" "1100000000000000" "0200"
    ) + b"hi"
    assert encode_message(m) == want
    assert decode_message(want) == m


messages = st.integers(1, 63).flatmap(
    lambda k: st.builds(
        RboMessage,
        st.integers(0, 2**32 - 1),
        st.just(k),
        st.integers(0, 2**32 - 1),
        st.integers(0, 2**64 - 1),
        st.integers(0, 2**k - 1),
        st.binary(max_size=MAX_PAYLOAD),
    )
)


@settings(max_examples=300)
@given(messages)
def test_roundtrip(m):
    data = encode_message(m)
    assert len(data) == HEADER_SIZE + len(m.payload)
    assert decode_message(data) == m


def test_sequence_id_zero_flagged():
    m = decode_message(encode_message(RboMessage(0, 3, 100, 5, 2)))
    assert m.bad
    assert not RboMessage(1, 3, 100, 5, 2).bad


def test_message_slot():
    assert RboMessage(1, 3, 100, 0, 1).slot == 4


@pytest.mark.parametrize(
    "m",
    [
        RboMessage(1, 3, 0, 0, 8),
        RboMessage(1, 0, 0, 0, 0),
        RboMessage(1, 64, 0, 0, 0),
        RboMessage(2**32, 3, 0, 0, 0),
        RboMessage(1, 3, 0, 2**64, 0),
        RboMessage(1, 3, 0, 0, 0, bytes(MAX_PAYLOAD + 1)),
    ],
)
def test_encode_rejects(m):
    with pytest.raises(EncodeError):
        encode_message(m)


def test_decode_rejects():
    good = encode_message(RboMessage(1, 3, 100, 5, 2, b"abc"))
    with pytest.raises(DecodeError):
        decode_message(good[:10])
    with pytest.raises(DecodeError):
        decode_message(good[:-1])
    with pytest.raises(DecodeError):
        decode_message(good + b"x")
    # rank = 2^k
    bad = bytearray(good)
    bad[17] = 8
    with pytest.raises(DecodeError):
        decode_message(bytes(bad))


# -- sender -----------------------------------------------------------------


def test_schedule_power_of_two_unchanged():
    s = build_schedule([(k, b"") for k in (4, 1, 3, 2)], 7, 100)
    assert s.k == 2 and s.keys == [1, 2, 3, 4]


def test_schedule_pads_three_to_four():
    s = build_schedule([(c, c.encode()) for c in "cab"], 7, 100)
    assert len(s) == 4 and s.keys == sorted(s.keys)
    assert set(s.keys) == {"a", "b", "c"}


def test_schedule_single_item_pads_to_two():
    s = build_schedule([(9, b"x")], 1, 50)
    assert s.k == 1 and s.keys == [9, 9]


@pytest.mark.parametrize("items,seq", [([], 1), ([(1, b"")], 0)])
def test_schedule_errors(items, seq):
    with pytest.raises(DomainError):
        build_schedule(items, seq, 100)


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=300))
def test_schedule_properties(keys):
    s = build_schedule([(k, b"") for k in keys], 3, 100)
    n = len(keys)
    assert len(s) == 1 << s.k and len(s) >= n and (s.k == 1 or len(s) < 2 * n)
    assert s.keys == sorted(s.keys)
    assert sorted(set(s.keys)) == sorted(set(keys))
    assert len(padding_positions(n)) == len(s) - n


def test_slot_message():
    s = build_schedule([(10 * i, b"") for i in range(8)], 1, 100)
    assert slot_message(s, 1).rank == 4
    assert slot_message(s, 8) == slot_message(s, 0)
    assert slot_message(s, 0).rank == 0
    assert all(slot_message(s, t).slot == t for t in range(8))


# -- receiver state machine -------------------------------------------------

EXACT = ProtocolConfig(time_margin_ms=0, relative_margin_divisor=None, min_sleeping_time_ms=150, timeout_ms=800)


def listening_fsm(key, config=EXACT):
    fsm = ReceiverFsm(config)
    fx = fsm_search(fsm, key)
    assert RadioOn() in fx and ArmTimer(Timer.TIMEOUT, config.timeout_ms) in fx
    assert fsm.state is State.LISTENING
    return fsm


def msg(k, rank, key, seq=1, slot_ms=100):
    return RboMessage(seq, k, slot_ms, key, rank)


def test_sleep_arithmetic_default_margins():
    cfg = ProtocolConfig(time_margin_ms=5, relative_margin_divisor=64, min_sleeping_time_ms=150)
    assert cfg.sleep_duration(400) == 389


def test_divisor_must_be_power_of_two():
    with pytest.raises(ValueError):
        ProtocolConfig(relative_margin_divisor=48)


def test_for_slot_length_defaults():
    cfg = ProtocolConfig.for_slot_length(100)
    assert (cfg.min_sleeping_time_ms, cfg.timeout_ms, cfg.time_margin_ms) == (200, 800, 5)


def test_received_sleeps_until_next_useful_slot():
    # k=3 keys 0,10,..,70; searching 25; rank 1 heard in slot 4 -> interval [2,7]
    fsm = listening_fsm(25)
    fx = fsm_received(fsm, msg(3, 1, 10))
    assert fsm.interval == (2, 7)
    # next slot after 4 with rank in [2,7] is 5 (rank 5): 1 slot = 100 ms < 150
    assert fsm.last_next_slot == 5 and fsm.last_remaining_ms == 100
    assert fsm.state is State.LISTENING
    fsm.check_invariants()
    # rank 5 (key 50) heard in slot 5 -> [2,4]; next rank-in-interval slot is 6
    fx = fsm_received(fsm, msg(3, 5, 50))
    assert fsm.last_next_slot == 6 and fsm.state is State.LISTENING
    # rank 3 in slot 6 -> [2,2]; next is slot 2, wrap: 8 - 6 + 2 = 4 slots
    fx = fsm_received(fsm, msg(3, 3, 30))
    assert fsm.last_remaining_ms == 400
    assert fsm.state is State.SLEEPING
    assert ArmTimer(Timer.SLEEPING, 400) in fx and RadioOff() in fx
    fsm.check_invariants()
    fx = fsm_timer_fired(fsm, Timer.SLEEPING)
    assert fsm.state is State.LISTENING and RadioOn() in fx
    fx = fsm_received(fsm, msg(3, 2, 20))
    assert SearchDone(msg(3, 2, 20), Status.KEY_NOT_PRESENT) in fx
    assert fsm.state is State.IDLE
    fsm.check_invariants()


def primed(key, minr, maxr):
    fsm = listening_fsm(key)
    fsm.sequence_id, fsm.log_sequence_length = 1, 3
    fsm.min_rank, fsm.max_rank = minr, maxr
    return fsm


def test_remaining_time_forward_and_wrap():
    # now = slot 2, only rank 3 (slot 6) useful: 4 slots
    fsm = primed(35, 3, 3)
    fsm_received(fsm, msg(3, 2, 20))
    assert (fsm.last_next_slot, fsm.last_remaining_ms) == (6, 400)
    # now = slot 6, only rank 0 (slot 0) useful: 8 - 6 + 0 = 2 slots
    fsm = primed(5, 0, 0)
    fsm_received(fsm, msg(3, 3, 30))
    assert (fsm.last_next_slot, fsm.last_remaining_ms) == (0, 200)


def test_success_and_bad_message():
    fsm = listening_fsm(20)
    fx = fsm_received(fsm, msg(3, 2, 20))
    assert fx[-1] == SearchDone(msg(3, 2, 20), Status.SUCCESS) and fsm.state is State.IDLE
    fsm = listening_fsm(20)
    fx = fsm_received(fsm, msg(3, 2, 20, seq=0))
    assert fx[-1].status is Status.BAD_MESSAGE and fsm.state is State.IDLE
    fsm.check_invariants()


def test_timeout_and_stale_timers():
    fsm = listening_fsm(5)
    assert fsm_timer_fired(fsm, Timer.SLEEPING) == []
    fx = fsm_timer_fired(fsm, Timer.TIMEOUT)
    assert SearchDone(None, Status.TIMEOUT) in fx and fsm.state is State.IDLE
    assert fsm_timer_fired(fsm, Timer.TIMEOUT) == []
    assert fsm_timer_fired(fsm, Timer.SLEEPING) == []


def test_search_bound_reuse():
    fsm = listening_fsm(35)
    fsm_received(fsm, msg(3, 1, 10))
    fsm_received(fsm, msg(3, 5, 50))
    assert fsm.interval == (2, 4)
    fsm_stop(fsm)
    assert fsm.state is State.IDLE
    fsm_search(fsm, 35)
    assert fsm.interval == (2, 4)
    fsm_search(fsm, 25)
    assert fsm.interval == (0, 4)
    fsm_search(fsm, 45)
    assert fsm.interval == (0, 7)


def test_reset_forgets_sequence():
    fsm = listening_fsm(35)
    fsm_received(fsm, msg(3, 1, 10))
    fsm_reset(fsm)
    assert fsm.sequence_id == 0 and fsm.state is State.IDLE
    fsm_search(fsm, 35)
    fsm_received(fsm, msg(3, 6, 60))
    # interval rebuilt from scratch: [0, 5], not [2, 5]
    assert fsm.interval == (0, 5)


def test_sequence_change_reinitializes():
    fsm = listening_fsm(35)
    fsm_received(fsm, msg(3, 1, 10))
    fsm_received(fsm, msg(4, 15, 150, seq=2))
    assert fsm.interval == (0, 14) and fsm.log_sequence_length == 4


def test_radio_failure():
    fsm = listening_fsm(35)
    fx = fsm.radio_done(on=True, ok=False)
    assert fx[-1].status is Status.FAILED_RADIO and fsm.state is State.IDLE


def test_received_ignored_unless_listening():
    fsm = ReceiverFsm(EXACT)
    assert fsm_received(fsm, msg(3, 1, 10)) == []


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_fsm_safety_random_events(data):
    k = 4
    keys = [3 * r for r in range(16)]
    cfg = ProtocolConfig(time_margin_ms=data.draw(st.integers(0, 20)), min_sleeping_time_ms=150)
    fsm = ReceiverFsm(cfg)
    for _ in range(data.draw(st.integers(1, 40))):
        ev = data.draw(st.sampled_from(["search", "stop", "reset", "rx", "timeout", "sleep", "radio"]))
        before = fsm.state
        if ev == "search":
            fx = fsm_search(fsm, data.draw(st.integers(-1, 50)))
        elif ev == "stop":
            fx = fsm_stop(fsm)
        elif ev == "reset":
            fx = fsm_reset(fsm)
        elif ev == "rx":
            r = data.draw(st.integers(0, 15))
            fx = fsm_received(fsm, msg(k, r, keys[r]))
        elif ev == "timeout":
            fx = fsm_timer_fired(fsm, Timer.TIMEOUT)
        elif ev == "sleep":
            fx = fsm_timer_fired(fsm, Timer.SLEEPING)
        else:
            fx = fsm.radio_done(data.draw(st.booleans()), data.draw(st.booleans()))
        fsm.check_invariants()
        if RadioOn() in fx:
            assert fsm.state is State.LISTENING
        if RadioOff() in fx:
            assert fsm.state in (State.SLEEPING, State.IDLE)
        for e in fx:
            if isinstance(e, ArmTimer) and e.timer is Timer.SLEEPING:
                # margins only shorten the sleep
                assert 0 < e.delay_ms <= fsm.last_remaining_ms
        if ev == "rx" and before is State.LISTENING and fsm.state is State.LISTENING:
            assert fsm.min_rank <= fsm.max_rank
