"""Wire format, sender schedule and receiver state machine."""
from .receiver import (
    ArmTimer,
    CancelTimer,
    Effect,
    ProtocolConfig,
    Radio,
    RadioOff,
    RadioOn,
    ReceiverFsm,
    SearchDone,
    State,
    Status,
    Timer,
    fsm_received,
    fsm_reset,
    fsm_search,
    fsm_stop,
    fsm_timer_fired,
)
from .sender import BroadcastSchedule, build_schedule, padding_positions, slot_message
from .wire import (
    HEADER_SIZE,
    MAX_PAYLOAD,
    WIRE_VERSION,
    DecodeError,
    EncodeError,
    RboMessage,
    decode_message,
    encode_message,
)
