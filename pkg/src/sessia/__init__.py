"""sessia: linear and shared session types as checked, runnable programs.

Programs are assembled from term constructors, checked against their
protocol when annotated or linked (`session`, `apply_channel`,
`shared_session`), and executed by a managed asyncio runtime
(`run_session`, `run_shared_session`). Construction and checking never
communicate; execution never re-checks what construction established.
"""

from .context import Empty, S, Z, append, empty_endpoints, length_of, lens_resolve, nat
from .core import (
    PartialSession,
    Session,
    apply_channel,
    cut,
    forward,
    include_session,
    run_session,
    session,
)
from .constructs import (
    case,
    choose,
    choose_left,
    choose_right,
    offer,
    offer_choice,
    offer_left,
    offer_right,
    receive_channel,
    receive_channel_from,
    receive_value,
    receive_value_from,
    send_channel_from,
    send_channel_to,
    send_value,
    send_value_async,
    send_value_to,
    terminate,
    wait,
)
from .errors import (
    LinearityError,
    ProtocolError,
    RuntimeViolation,
    SessionTypeError,
    SharedTypeError,
)
from .instrument import Recorder, Transcript, record_event, recording
from .protocols import (
    End,
    ExternalChoice,
    InternalChoice,
    Protocol,
    ReceiveChannel,
    ReceiveValue,
    SendChannel,
    SendValue,
    SharedProtocol,
    payload_of,
)
from .recursion import Fix, fix_session, type_apply, unfix_session_for
from .runtime import LEFT, RIGHT
from .shared import (
    LinearToShared,
    Lock,
    SharedChannel,
    SharedSession,
    SharedToLinear,
    accept_shared_session,
    acquire_shared_session,
    detach_shared_session,
    release_shared_session,
    run_shared_session,
    shared_session,
    shared_type_apply,
)

__all__ = [
    "Empty",
    "End",
    "ExternalChoice",
    "Fix",
    "InternalChoice",
    "LEFT",
    "LinearToShared",
    "LinearityError",
    "Lock",
    "PartialSession",
    "Protocol",
    "ProtocolError",
    "RIGHT",
    "ReceiveChannel",
    "ReceiveValue",
    "Recorder",
    "RuntimeViolation",
    "S",
    "SendChannel",
    "SendValue",
    "Session",
    "SessionTypeError",
    "SharedChannel",
    "SharedProtocol",
    "SharedSession",
    "SharedToLinear",
    "SharedTypeError",
    "Transcript",
    "Z",
    "accept_shared_session",
    "acquire_shared_session",
    "append",
    "apply_channel",
    "case",
    "choose",
    "choose_left",
    "choose_right",
    "cut",
    "detach_shared_session",
    "empty_endpoints",
    "fix_session",
    "forward",
    "include_session",
    "length_of",
    "lens_resolve",
    "nat",
    "offer",
    "offer_choice",
    "offer_left",
    "offer_right",
    "payload_of",
    "receive_channel",
    "receive_channel_from",
    "receive_value",
    "receive_value_from",
    "record_event",
    "recording",
    "release_shared_session",
    "run_session",
    "run_shared_session",
    "send_channel_from",
    "send_channel_to",
    "send_value",
    "send_value_async",
    "send_value_to",
    "session",
    "shared_session",
    "shared_type_apply",
    "terminate",
    "type_apply",
    "unfix_session_for",
    "wait",
]
