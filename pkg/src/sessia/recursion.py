"""Recursive session types: a type-level fixed point over protocol shapes.

`Fix(body)` closes a protocol shape over itself: the shape uses the marker
`Z` in continuation positions, and `type_apply(body, Fix(body))` is the one
and only unrolling. Rolling (`fix_session`) and unrolling
(`unfix_session_for`) are explicit and purely representational: no message
is exchanged and no channel is touched, which keeps the fixed point
iso-recursive.

`type_apply` substitutes the argument into continuation positions only:
delegated channel types (the carried side of channel send/receive) are
complete protocols of their own and are left untouched, as is any inner
`Fix`. Multi-level recursion markers (`S(Z)` and deeper) are not supported.
"""

from __future__ import annotations

from dataclasses import dataclass

from .context import S, _Z
from .errors import ProtocolError
from .protocols import (
    End,
    ExternalChoice,
    InternalChoice,
    Protocol,
    ReceiveChannel,
    ReceiveValue,
    SendChannel,
    SendValue,
    _End,
    check_protocol,
)


def type_apply(f: Protocol, x: Protocol) -> Protocol:
    """Substitute `x` for the recursion marker Z throughout `f`."""
    if isinstance(f, _Z):
        return x
    if isinstance(f, S):
        raise ProtocolError(
            "multi-level recursion markers (S(Z), ...) are not supported; "
            "only Z marks the recursion point"
        )
    if isinstance(f, _End):
        return f
    if isinstance(f, ReceiveValue):
        return ReceiveValue(f.value_type, type_apply(f.cont, x))
    if isinstance(f, SendValue):
        return SendValue(f.value_type, type_apply(f.cont, x))
    if isinstance(f, ReceiveChannel):
        return ReceiveChannel(f.carried, type_apply(f.cont, x))
    if isinstance(f, SendChannel):
        return SendChannel(f.carried, type_apply(f.cont, x))
    if isinstance(f, ExternalChoice):
        return ExternalChoice(type_apply(f.left, x), type_apply(f.right, x))
    if isinstance(f, InternalChoice):
        return InternalChoice(type_apply(f.left, x), type_apply(f.right, x))
    if isinstance(f, Fix):
        # An inner fixed point is a complete protocol; its own Z is bound.
        return f
    if isinstance(f, Protocol):
        # Remaining leaves (e.g. a release step) carry no open recursion.
        return f
    raise ProtocolError(f"type_apply: {f!r} is not a session type")


@dataclass(frozen=True)
class Fix(Protocol):
    """The fixed point of a protocol shape; unrolls to one step of itself."""

    body: Protocol

    def __post_init__(self):
        check_protocol(self.body, "Fix body")
        # Probe the substitution now so malformed bodies fail at type
        # formation rather than at first unroll.
        type_apply(self.body, End)

    def unroll(self) -> Protocol:
        return type_apply(self.body, self)

    def payload_layout(self):
        # Rolling is representation-only; the wire carries the unrolling.
        return self.unroll().payload_layout()

    def __str__(self):
        return f"Fix({self.body})"


def fix_session(cont):
    """Roll the unrolled session offered by `cont` into the fixed point."""
    from .core import PartialSession, expect_program

    expect_program(cont, "fix_session")

    def resolve(ctx, offer):
        if not isinstance(offer, Fix):
            raise ProtocolError(
                f"fix_session offers a Fix protocol, "
                f"but the expected protocol here is {offer}"
            )
        return cont._resolve(ctx, offer.unroll())

    return PartialSession("fix_session", resolve)


def unfix_session_for(n, cont):
    """Unroll the recursive protocol at slot `n`; exchanges nothing."""
    from .context import lens_resolve, slot_at
    from .core import PartialSession, expect_program

    expect_program(cont, "unfix_session_for")

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if not isinstance(slot, Fix):
            raise ProtocolError(
                f"unfix_session_for: lens {n.level}: slot has type {slot}, "
                f"expected a Fix protocol"
            )
        target = lens_resolve(n, ctx, slot, slot.unroll())
        return cont._resolve(target, offer)

    return PartialSession("unfix_session_for", resolve)
