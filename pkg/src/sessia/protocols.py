"""Session type constructors and their runtime payload layouts.

A session type (protocol) describes one endpoint of a conversation from the
provider's point of view. Each constructor fixes, once and for all, what a
single message on a channel of that type carries:

* provider-polarity sends travel as a direct payload on the step channel;
* provider-polarity receives nest a fresh sender inside the payload so the
  provider can receive without ever holding a receiving endpoint
  (polarity reversal);
* every constructor with a continuation embeds exactly one continuation
  endpoint in its payload, which is how the conversation advances to the
  next step channel.

Value types carried by `ReceiveValue`/`SendValue` must be transferable
between tasks; they are given as a Python type (or tuple of types) and are
enforced with `isinstance` when a value is sent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ProtocolError


class Protocol:
    """Marker base class for linear session types."""

    def payload_layout(self) -> PayloadLayout:
        raise NotImplementedError

    def __repr__(self):
        return str(self)


class SharedProtocol:
    """Marker base class for shared session types."""

    def __repr__(self):
        return str(self)


@dataclass(frozen=True)
class PayloadPart:
    role: str
    detail: str = ""

    def __str__(self):
        return f"{self.role}({self.detail})" if self.detail else self.role


@dataclass(frozen=True)
class PayloadLayout:
    """What one message on a channel of a given protocol carries.

    kind is "direct" for provider-polarity sends (the payload rides the
    step channel itself), "reversed" for provider-polarity receives (the
    payload is a fresh outbound sender through which the client replies),
    and "signal" for the bare termination message.
    """

    kind: str
    parts: tuple[PayloadPart, ...]

    def continuation_parts(self) -> tuple[PayloadPart, ...]:
        return tuple(p for p in self.parts if p.role.startswith("continuation"))


def type_name(t) -> str:
    if isinstance(t, tuple):
        return "|".join(type_name(x) for x in t)
    return getattr(t, "__name__", str(t))


def _check_value_type(t, who: str):
    ok = isinstance(t, type) or (
        isinstance(t, tuple) and t and all(isinstance(x, type) for x in t)
    )
    if not ok:
        raise ProtocolError(
            f"{who}: value type must be a type or tuple of types, got {t!r}"
        )


def check_protocol(p, who: str) -> None:
    if not isinstance(p, Protocol):
        raise ProtocolError(f"{who}: expected a session type, got {p!r}")


class _End(Protocol):
    """Terminated session: one termination signal, no continuation."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def payload_layout(self):
        return PayloadLayout("signal", (PayloadPart("termination"),))

    def __str__(self):
        return "End"

    def __eq__(self, other):
        return isinstance(other, _End)

    def __hash__(self):
        return hash("End")


End = _End()


@dataclass(frozen=True)
class ReceiveValue(Protocol):
    """Receive a value of `value_type`, then continue as `cont`."""

    value_type: object
    cont: Protocol

    def __post_init__(self):
        _check_value_type(self.value_type, "ReceiveValue")
        check_protocol(self.cont, "ReceiveValue continuation")

    def payload_layout(self):
        return PayloadLayout(
            "reversed",
            (
                PayloadPart("value", type_name(self.value_type)),
                PayloadPart("continuation-provider-endpoint", str(self.cont)),
            ),
        )

    def __str__(self):
        return f"ReceiveValue({type_name(self.value_type)}, {self.cont})"


@dataclass(frozen=True)
class SendValue(Protocol):
    """Send a value of `value_type`, then continue as `cont`."""

    value_type: object
    cont: Protocol

    def __post_init__(self):
        _check_value_type(self.value_type, "SendValue")
        check_protocol(self.cont, "SendValue continuation")

    def payload_layout(self):
        return PayloadLayout(
            "direct",
            (
                PayloadPart("value", type_name(self.value_type)),
                PayloadPart("continuation-client-endpoint", str(self.cont)),
            ),
        )

    def __str__(self):
        return f"SendValue({type_name(self.value_type)}, {self.cont})"


@dataclass(frozen=True)
class ReceiveChannel(Protocol):
    """Receive a channel of type `carried`, then continue as `cont`."""

    carried: Protocol
    cont: Protocol

    def __post_init__(self):
        check_protocol(self.carried, "ReceiveChannel carried channel")
        check_protocol(self.cont, "ReceiveChannel continuation")

    def payload_layout(self):
        # The received channel always arrives at client polarity.
        return PayloadLayout(
            "reversed",
            (
                PayloadPart("delegated-client-endpoint", str(self.carried)),
                PayloadPart("continuation-provider-endpoint", str(self.cont)),
            ),
        )

    def __str__(self):
        return f"ReceiveChannel({self.carried}, {self.cont})"


@dataclass(frozen=True)
class SendChannel(Protocol):
    """Send a channel of type `carried`, then continue as `cont`."""

    carried: Protocol
    cont: Protocol

    def __post_init__(self):
        check_protocol(self.carried, "SendChannel carried channel")
        check_protocol(self.cont, "SendChannel continuation")

    def payload_layout(self):
        return PayloadLayout(
            "direct",
            (
                PayloadPart("delegated-client-endpoint", str(self.carried)),
                PayloadPart("continuation-client-endpoint", str(self.cont)),
            ),
        )

    def __str__(self):
        return f"SendChannel({self.carried}, {self.cont})"


@dataclass(frozen=True)
class ExternalChoice(Protocol):
    """Offer both branches; the client picks left or right."""

    left: Protocol
    right: Protocol

    def __post_init__(self):
        check_protocol(self.left, "ExternalChoice left branch")
        check_protocol(self.right, "ExternalChoice right branch")

    def payload_layout(self):
        # One tag per choice point, plus the provider endpoint of the
        # branch the tag selects.
        return PayloadLayout(
            "reversed",
            (
                PayloadPart("branch-tag", "left|right"),
                PayloadPart(
                    "continuation-provider-endpoint", f"{self.left} or {self.right}"
                ),
            ),
        )

    def __str__(self):
        return f"ExternalChoice({self.left}, {self.right})"


@dataclass(frozen=True)
class InternalChoice(Protocol):
    """The provider picks left or right and announces it."""

    left: Protocol
    right: Protocol

    def __post_init__(self):
        check_protocol(self.left, "InternalChoice left branch")
        check_protocol(self.right, "InternalChoice right branch")

    def payload_layout(self):
        return PayloadLayout(
            "direct",
            (
                PayloadPart("branch-tag", "left|right"),
                PayloadPart(
                    "continuation-client-endpoint", f"{self.left} or {self.right}"
                ),
            ),
        )

    def __str__(self):
        return f"InternalChoice({self.left}, {self.right})"


def payload_of(p: Protocol) -> PayloadLayout:
    """Payload layout of one message on a channel of protocol `p`."""
    check_protocol(p, "payload_of")
    return p.payload_layout()
