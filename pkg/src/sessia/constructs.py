"""Term constructors for the linear typing rules.

Each function maps premise programs to a conclusion program: the returned
`PartialSession`, once its judgment is imposed, checks the premises against
the judgments the rule dictates and wires up the executor that performs the
construct's single protocol step before delegating to the continuation.

Provider-side rules act on the offer handle; client-side rules act on a
context slot through a lens and leave the offered protocol alone. Value
payloads are checked against the declared value type when sent.
"""

from __future__ import annotations

from .context import (
    Empty,
    append,
    append_endpoint,
    endpoints_at,
    first_live_slot,
    is_empty_context,
    length_of,
    lens_resolve,
    replace_endpoint,
    slot_at,
)
from .core import (
    OneShotContinuation,
    PartialSession,
    expect_program,
    force,
    resolve_deferred,
)
from .errors import LinearityError, ProtocolError
from .instrument import record_event
from .protocols import (
    End,
    ExternalChoice,
    InternalChoice,
    ReceiveChannel,
    ReceiveValue,
    SendChannel,
    SendValue,
    type_name,
)
from .runtime import END, LEFT, RIGHT, Branch, channel


def _check_value(rule: str, value, value_type):
    if not isinstance(value, value_type):
        raise ProtocolError(
            f"{rule}: value {value!r} is not of declared type {type_name(value_type)}"
        )


# -- termination -----------------------------------------------------------


def terminate() -> PartialSession:
    """Send the termination signal; every linear channel must be consumed."""

    def resolve(ctx, offer):
        if offer != End:
            raise ProtocolError(
                f"terminate offers End, but the expected protocol here is {offer}"
            )
        if not is_empty_context(ctx):
            live = first_live_slot(ctx)
            raise LinearityError(
                f"terminate requires an empty linear context; "
                f"slot {live[0]} still holds {live[1]}"
            )

        async def execute(endpoints, offer_chan):
            record_event("END")
            offer_chan.send(END)

        return execute

    return PartialSession("terminate", resolve, synth_protocol=End)


def wait(n, cont) -> PartialSession:
    """Block until the provider at slot `n` terminates, then continue."""
    expect_program(cont, "wait")

    def resolve(ctx, offer):
        target = lens_resolve(n, ctx, End, Empty)
        exec_cont = cont._resolve(target, offer)
        level = n.level

        async def execute(endpoints, offer_chan):
            await endpoints_at(endpoints, level).recv()
            await exec_cont(replace_endpoint(endpoints, level, ()), offer_chan)

        return execute

    return PartialSession("wait", resolve, synth_protocol=cont._synth)


# -- value input (provider receives) ----------------------------------------


def receive_value(cont) -> PartialSession:
    """Offer to receive one value; it is passed to `cont` exactly once."""
    once = OneShotContinuation("receive_value", cont)

    def resolve(ctx, offer):
        if not isinstance(offer, ReceiveValue):
            raise ProtocolError(
                f"receive_value offers ReceiveValue, "
                f"but the expected protocol here is {offer}"
            )
        after = offer.cont

        async def execute(endpoints, offer_chan):
            sender, receiver = channel()
            offer_chan.send(sender)
            value, next_offer = await receiver.recv()
            premise = await force(once(value))
            exec_p = resolve_deferred(premise, ctx, after, "receive_value continuation")
            await exec_p(endpoints, next_offer)

        return execute

    return PartialSession("receive_value", resolve)


def send_value_to(n, value, cont) -> PartialSession:
    """Deliver `value` to the receiving provider at slot `n`."""
    expect_program(cont, "send_value_to")

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if not isinstance(slot, ReceiveValue):
            raise ProtocolError(
                f"send_value_to: lens {n.level}: slot has type {slot}, "
                f"expected a ReceiveValue step"
            )
        _check_value("send_value_to", value, slot.value_type)
        target = lens_resolve(n, ctx, slot, slot.cont)
        exec_cont = cont._resolve(target, offer)
        level = n.level

        async def execute(endpoints, offer_chan):
            outbound = await endpoints_at(endpoints, level).recv()
            sender, receiver = channel()
            outbound.send((value, sender))
            await exec_cont(replace_endpoint(endpoints, level, receiver), offer_chan)

        return execute

    return PartialSession("send_value_to", resolve, synth_protocol=cont._synth)


# -- value output (provider sends) -------------------------------------------


def send_value(value, cont) -> PartialSession:
    """Send `value` together with the continuation endpoint, then continue."""
    expect_program(cont, "send_value")

    def resolve(ctx, offer):
        if not isinstance(offer, SendValue):
            raise ProtocolError(
                f"send_value offers SendValue, "
                f"but the expected protocol here is {offer}"
            )
        _check_value("send_value", value, offer.value_type)
        exec_cont = cont._resolve(ctx, offer.cont)

        async def execute(endpoints, offer_chan):
            sender, receiver = channel()
            offer_chan.send((value, receiver))
            await exec_cont(endpoints, sender)

        return execute

    synth = None
    if cont._synth is not None:
        synth = SendValue(type(value), cont._synth)
    return PartialSession("send_value", resolve, synth_protocol=synth)


def send_value_async(produce) -> PartialSession:
    """Like send_value, but the pair (value, continuation program) is
    produced lazily by `produce` only when the program is already running."""
    once = OneShotContinuation("send_value_async", produce)

    def resolve(ctx, offer):
        if not isinstance(offer, SendValue):
            raise ProtocolError(
                f"send_value_async offers SendValue, "
                f"but the expected protocol here is {offer}"
            )
        value_type, after = offer.value_type, offer.cont

        async def execute(endpoints, offer_chan):
            value, premise = await force(once())
            _check_value("send_value_async", value, value_type)
            exec_p = resolve_deferred(premise, ctx, after, "send_value_async producer")
            sender, receiver = channel()
            offer_chan.send((value, receiver))
            await exec_p(endpoints, sender)

        return execute

    return PartialSession("send_value_async", resolve)


def receive_value_from(n, cont) -> PartialSession:
    """Take the next value sent by the provider at slot `n`; `cont` may
    return its continuation program asynchronously."""
    once = OneShotContinuation("receive_value_from", cont)

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if not isinstance(slot, SendValue):
            raise ProtocolError(
                f"receive_value_from: lens {n.level}: slot has type {slot}, "
                f"expected a SendValue step"
            )
        target = lens_resolve(n, ctx, slot, slot.cont)
        level = n.level

        async def execute(endpoints, offer_chan):
            value, next_endpoint = await endpoints_at(endpoints, level).recv()
            premise = await force(once(value))
            exec_p = resolve_deferred(
                premise, target, offer, "receive_value_from continuation"
            )
            await exec_p(
                replace_endpoint(endpoints, level, next_endpoint), offer_chan
            )

        return execute

    return PartialSession("receive_value_from", resolve)


# -- channel delegation -------------------------------------------------------


def receive_channel(cont) -> PartialSession:
    """Offer to receive a channel; it is appended to the context and `cont`
    gets the lens for it (the current context length)."""
    once = OneShotContinuation("receive_channel", cont)

    def resolve(ctx, offer):
        if not isinstance(offer, ReceiveChannel):
            raise ProtocolError(
                f"receive_channel offers ReceiveChannel, "
                f"but the expected protocol here is {offer}"
            )
        lens = length_of(ctx)
        premise = expect_program(once(lens), "receive_channel continuation")
        exec_p = premise._resolve(append(ctx, (offer.carried, ())), offer.cont)

        async def execute(endpoints, offer_chan):
            sender, receiver = channel()
            offer_chan.send(sender)
            carried_endpoint, next_offer = await receiver.recv()
            await exec_p(append_endpoint(endpoints, carried_endpoint), next_offer)

        return execute

    return PartialSession("receive_channel", resolve)


def send_channel_to(n1, n2, cont) -> PartialSession:
    """Delegate the channel at slot `n2` to the channel-expecting provider
    at slot `n1`; `n2` is consumed, `n1` steps to its continuation."""
    expect_program(cont, "send_channel_to")

    def resolve(ctx, offer):
        carried = slot_at(n2, ctx)
        if carried == Empty:
            raise LinearityError(
                f"send_channel_to: lens {n2.level}: slot has type Empty, "
                f"expected a live channel"
            )
        mid = lens_resolve(n2, ctx, carried, Empty)
        slot = slot_at(n1, mid)
        if not isinstance(slot, ReceiveChannel):
            raise ProtocolError(
                f"send_channel_to: lens {n1.level}: slot has type {slot}, "
                f"expected a ReceiveChannel step"
            )
        if slot.carried != carried:
            raise ProtocolError(
                f"send_channel_to: slot {n1.level} expects a channel of type "
                f"{slot.carried}, but slot {n2.level} offers {carried}"
            )
        target = lens_resolve(n1, mid, slot, slot.cont)
        exec_cont = cont._resolve(target, offer)
        level1, level2 = n1.level, n2.level

        async def execute(endpoints, offer_chan):
            outbound = await endpoints_at(endpoints, level1).recv()
            sender, receiver = channel()
            outbound.send((endpoints_at(endpoints, level2), sender))
            endpoints = replace_endpoint(endpoints, level2, ())
            await exec_cont(replace_endpoint(endpoints, level1, receiver), offer_chan)

        return execute

    return PartialSession("send_channel_to", resolve, synth_protocol=cont._synth)


def send_channel_from(n, cont) -> PartialSession:
    """Send the channel held at slot `n` to the client, consuming the slot."""
    expect_program(cont, "send_channel_from")

    def resolve(ctx, offer):
        if not isinstance(offer, SendChannel):
            raise ProtocolError(
                f"send_channel_from offers SendChannel, "
                f"but the expected protocol here is {offer}"
            )
        carried = slot_at(n, ctx)
        if carried != offer.carried:
            raise ProtocolError(
                f"send_channel_from: lens {n.level}: slot has type {carried}, "
                f"but the offered protocol sends {offer.carried}"
            )
        target = lens_resolve(n, ctx, carried, Empty)
        exec_cont = cont._resolve(target, offer.cont)
        level = n.level

        async def execute(endpoints, offer_chan):
            sender, receiver = channel()
            offer_chan.send((endpoints_at(endpoints, level), receiver))
            await exec_cont(replace_endpoint(endpoints, level, ()), sender)

        return execute

    return PartialSession("send_channel_from", resolve)


def receive_channel_from(n, cont) -> PartialSession:
    """Receive the channel delegated by the provider at slot `n`; it is
    appended to the context and `cont` gets the lens for it."""
    once = OneShotContinuation("receive_channel_from", cont)

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if not isinstance(slot, SendChannel):
            raise ProtocolError(
                f"receive_channel_from: lens {n.level}: slot has type {slot}, "
                f"expected a SendChannel step"
            )
        mid = lens_resolve(n, ctx, slot, slot.cont)
        lens = length_of(mid)
        premise = expect_program(once(lens), "receive_channel_from continuation")
        exec_p = premise._resolve(append(mid, (slot.carried, ())), offer)
        level = n.level

        async def execute(endpoints, offer_chan):
            carried_endpoint, next_endpoint = await endpoints_at(
                endpoints, level
            ).recv()
            endpoints = replace_endpoint(endpoints, level, next_endpoint)
            await exec_p(append_endpoint(endpoints, carried_endpoint), offer_chan)

        return execute

    return PartialSession("receive_channel_from", resolve)


# -- binary choice ------------------------------------------------------------


def offer_choice(left, right) -> PartialSession:
    """Offer both branches over the same context; the client's tag decides
    which one runs. Only the chosen branch ever executes."""
    expect_program(left, "offer_choice")
    expect_program(right, "offer_choice")

    def resolve(ctx, offer):
        if not isinstance(offer, ExternalChoice):
            raise ProtocolError(
                f"offer_choice offers ExternalChoice, "
                f"but the expected protocol here is {offer}"
            )
        exec_left = left._resolve(ctx, offer.left)
        exec_right = right._resolve(ctx, offer.right)

        async def execute(endpoints, offer_chan):
            sender, receiver = channel()
            offer_chan.send(sender)
            branch = await receiver.recv()
            chosen = exec_left if branch.side == LEFT else exec_right
            await chosen(endpoints, branch.endpoint)

        return execute

    return PartialSession("offer_choice", resolve)


def choose(side: str, n, cont) -> PartialSession:
    """Send a branch tag to the choice provider at slot `n`."""
    if side not in (LEFT, RIGHT):
        raise ProtocolError(f"choose: side must be 'left' or 'right', got {side!r}")
    expect_program(cont, "choose")

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if not isinstance(slot, ExternalChoice):
            raise ProtocolError(
                f"choose_{side}: lens {n.level}: slot has type {slot}, "
                f"expected an ExternalChoice step"
            )
        chosen = slot.left if side == LEFT else slot.right
        target = lens_resolve(n, ctx, slot, chosen)
        exec_cont = cont._resolve(target, offer)
        level = n.level

        async def execute(endpoints, offer_chan):
            outbound = await endpoints_at(endpoints, level).recv()
            sender, receiver = channel()
            outbound.send(Branch(side, sender))
            await exec_cont(replace_endpoint(endpoints, level, receiver), offer_chan)

        return execute

    return PartialSession(f"choose_{side}", resolve, synth_protocol=cont._synth)


def choose_left(n, cont) -> PartialSession:
    return choose(LEFT, n, cont)


def choose_right(n, cont) -> PartialSession:
    return choose(RIGHT, n, cont)


def offer(side: str, cont) -> PartialSession:
    """Announce the chosen branch with a tag, then continue as that branch."""
    if side not in (LEFT, RIGHT):
        raise ProtocolError(f"offer: side must be 'left' or 'right', got {side!r}")
    expect_program(cont, "offer")

    def resolve(ctx, offer_protocol):
        if not isinstance(offer_protocol, InternalChoice):
            raise ProtocolError(
                f"offer_{side} offers InternalChoice, "
                f"but the expected protocol here is {offer_protocol}"
            )
        chosen = offer_protocol.left if side == LEFT else offer_protocol.right
        exec_cont = cont._resolve(ctx, chosen)

        async def execute(endpoints, offer_chan):
            sender, receiver = channel()
            offer_chan.send(Branch(side, receiver))
            await exec_cont(endpoints, sender)

        return execute

    return PartialSession(f"offer_{side}", resolve)


def offer_left(cont) -> PartialSession:
    return offer(LEFT, cont)


def offer_right(cont) -> PartialSession:
    return offer(RIGHT, cont)


def case(n, left, right) -> PartialSession:
    """Branch on the tag announced by the provider at slot `n`. Both branch
    programs must offer the same protocol; their contexts differ only at
    slot `n`, so eliminating either branch empties the same slot."""
    expect_program(left, "case")
    expect_program(right, "case")

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if not isinstance(slot, InternalChoice):
            raise ProtocolError(
                f"case: lens {n.level}: slot has type {slot}, "
                f"expected an InternalChoice step"
            )
        exec_left = left._resolve(lens_resolve(n, ctx, slot, slot.left), offer)
        exec_right = right._resolve(lens_resolve(n, ctx, slot, slot.right), offer)
        level = n.level

        async def execute(endpoints, offer_chan):
            branch = await endpoints_at(endpoints, level).recv()
            chosen = exec_left if branch.side == LEFT else exec_right
            await chosen(
                replace_endpoint(endpoints, level, branch.endpoint), offer_chan
            )

        return execute

    return PartialSession("case", resolve)
