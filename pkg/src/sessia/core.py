"""Session programs: the judgment carrier, the runner, and structural rules.

A `PartialSession` is an inert program that, *given* a linear context C and
an offered protocol A, checks itself against that judgment and yields a
one-shot executor. Nothing communicates until `run_session` is awaited;
checking happens strictly before execution:

* `session(A, program)` imposes the closed judgment (empty context,
  offering A) and returns a checked `Session` — the analogue of a typed
  let-binding. Linking constructs (`cut`, `include_session`,
  `apply_channel`) impose judgments on their premises the same way.
* Continuations that receive only a lens are invoked once at check time.
  Continuations that receive a communicated value cannot be checked before
  the value exists; their subtree is checked the moment the value arrives,
  still before that subtree executes.

Program values are linear: every `PartialSession`/`Session` is consumed by
the construct that uses it, and every executor runs at most once.
"""

from __future__ import annotations

import asyncio
import inspect
import itertools

from .context import (
    Empty,
    append,
    append_endpoint,
    context_str,
    first_live_slot,
    is_empty_context,
    length,
    length_of,
    lens_resolve,
    slot_at,
    split_endpoints,
    validate_context,
)
from .errors import LinearityError, ProtocolError, RuntimeViolation
from .instrument import active_recorder
from .protocols import End, Protocol, ReceiveChannel, check_protocol
from .runtime import (
    END,
    RunContext,
    Sender,
    channel,
    reset_run,
    set_run,
    spawn,
)

_tokens = itertools.count()


def _wrap_executor(rule: str, exec_fn):
    token = next(_tokens)
    ran = False

    async def run(endpoints, offer):
        nonlocal ran
        if ran:
            raise RuntimeViolation(f"{rule}: executor invoked twice")
        ran = True
        rec = active_recorder()
        if rec is not None:
            rec.executor_ran(token)
            if not isinstance(offer, Sender):
                rec.polarity_violation()
        if not isinstance(offer, Sender):
            raise RuntimeViolation(
                f"{rule}: executor needs the provider-side sending endpoint"
            )
        await exec_fn(endpoints, offer)

    return run


class OneShotContinuation:
    """Wraps a user continuation so it can be invoked exactly once."""

    __slots__ = ("_rule", "_fn", "_token", "_called")

    def __init__(self, rule: str, fn):
        if not callable(fn):
            raise ProtocolError(f"{rule}: continuation must be callable, got {fn!r}")
        self._rule = rule
        self._fn = fn
        self._token = next(_tokens)
        self._called = False

    def __call__(self, *args):
        if self._called:
            raise RuntimeViolation(f"{self._rule}: continuation invoked twice")
        self._called = True
        rec = active_recorder()
        if rec is not None:
            rec.continuation_ran(self._token)
        fn, self._fn = self._fn, None
        return fn(*args)


class PartialSession:
    """A suspended program offering some protocol over some linear context.

    Instances come from the term constructors and are consumed exactly once
    by the construct (or the `session` annotation) that uses them.
    """

    def __init__(self, rule: str, resolve_fn, synth_protocol: Protocol | None = None):
        self._rule = rule
        self._resolve_fn = resolve_fn
        self._synth = synth_protocol
        self._consumed = False

    def _take(self, what: str):
        if self._consumed:
            raise LinearityError(
                f"{what}: session program value already consumed (programs are linear)"
            )
        self._consumed = True

    def _resolve(self, ctx, offer):
        self._take(self._rule)
        validate_context(ctx, self._rule)
        check_protocol(offer, self._rule)
        return _wrap_executor(self._rule, self._resolve_fn(ctx, offer))

    def __repr__(self):
        return f"<PartialSession {self._rule}>"


def expect_program(p, rule: str) -> PartialSession:
    if not isinstance(p, PartialSession):
        raise ProtocolError(
            f"{rule}: expected a session program (PartialSession), got {p!r}"
        )
    return p


class Session(PartialSession):
    """A checked closed program: no free linear channels, offers `protocol`."""

    def __init__(self, protocol: Protocol, executor):
        super().__init__("session", None)
        self._protocol = protocol
        self._executor = executor

    @property
    def protocol(self) -> Protocol:
        return self._protocol

    def _resolve(self, ctx, offer):
        self._take("session")
        if ctx != ():
            raise LinearityError(
                f"a closed session cannot run in the non-empty context "
                f"{context_str(ctx)}"
            )
        if offer != self._protocol:
            raise ProtocolError(
                f"session offers {self._protocol}, "
                f"but the expected protocol here is {offer}"
            )
        executor, self._executor = self._executor, None
        return executor

    def __repr__(self):
        return f"<Session {self._protocol}>"


def session(protocol: Protocol, program: PartialSession) -> Session:
    """Check `program` against the closed judgment offering `protocol`."""
    check_protocol(protocol, "session")
    expect_program(program, "session")
    return Session(protocol, program._resolve((), protocol))


def run_session(s: Session):
    """Execute a checked Session(End) to completion; the only way to run.

    Returns an awaitable. All channels created during the run are consumed
    by the time it finishes; exceptions raised by embedded user code
    propagate and fail the whole run.
    """
    if not isinstance(s, Session):
        raise ProtocolError(
            f"run_session requires a Session(End); got {s!r} "
            f"(annotate the program with session(End, ...) first)"
        )
    if s.protocol != End:
        raise ProtocolError(
            f"run_session requires a Session(End); got Session({s.protocol})"
        )
    executor = s._resolve((), End)

    async def run():
        run_ctx = RunContext()
        token = set_run(run_ctx)
        try:
            sender, receiver = channel()

            async def main():
                await executor((), sender)
                signal = await receiver.recv()
                if signal is not END:
                    raise RuntimeViolation(
                        f"run_session: expected termination, got {signal!r}"
                    )

            task = spawn(main())
            try:
                await task
            except asyncio.CancelledError:
                if run_ctx.failure is None:
                    raise  # cancelled from outside the run
            except BaseException:
                pass  # reported below, after every task settled
            await run_ctx.drain()
        finally:
            reset_run(token)

    return run()


# -- structural constructs -----------------------------------------------


def forward(n) -> PartialSession:
    """Offer exactly the session found at slot `n`, which must be the only
    live slot. The single pending payload is relayed from the focused
    endpoint to the offer handle; the continuation endpoints it carries
    reconnect the two parties directly."""

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if slot != offer:
            raise ProtocolError(
                f"forward: lens {n.level}: slot has type {slot}, "
                f"but the expected protocol here is {offer}"
            )
        target = lens_resolve(n, ctx, slot, Empty)
        if not is_empty_context(target):
            live = first_live_slot(target)
            raise LinearityError(
                f"forward requires every other slot to be consumed; "
                f"slot {live[0]} still holds {live[1]}"
            )
        level = n.level

        async def execute(endpoints, offer_chan):
            from .context import endpoints_at

            payload = await endpoints_at(endpoints, level).recv()
            offer_chan.send(payload)

        return execute

    return PartialSession("forward", resolve)


def cut(cont1, cont2, *, provider_protocol=None, provider_context=None) -> PartialSession:
    """Spawn `cont2` as a concurrent provider; its channel becomes the last
    slot of `cont1`'s context.

    `cont2`'s own judgment must be known: pass a checked `Session`, or give
    `provider_protocol=` (and `provider_context=` if non-empty).
    """
    expect_program(cont1, "cut")
    expect_program(cont2, "cut")

    def resolve(ctx, offer):
        if isinstance(cont2, Session):
            a, c2 = cont2.protocol, ()
            if provider_protocol is not None and provider_protocol != a:
                raise ProtocolError(
                    f"cut: provider offers {a}, not {provider_protocol}"
                )
        else:
            a = provider_protocol if provider_protocol is not None else cont2._synth
            c2 = provider_context if provider_context is not None else ()
        if a is None:
            raise ProtocolError(
                "cut: cannot infer the provider protocol; pass a checked "
                "Session or provider_protocol=..."
            )
        c2_len = length(c2)
        c1_len = length(ctx) - c2_len
        if c1_len < 0:
            raise LinearityError(
                f"cut: provider context {context_str(c2)} is longer than "
                f"the whole context {context_str(ctx)}"
            )
        slots = []
        rest = ctx
        for _ in range(c1_len):
            head, rest = rest
            slots.append(head)
        if rest != c2:
            raise LinearityError(
                f"cut: context {context_str(ctx)} does not end with the "
                f"provider context {context_str(c2)}"
            )
        c1 = ()
        for slot in reversed(slots):
            c1 = (slot, c1)
        exec1 = cont1._resolve(append(c1, (a, ())), offer)
        exec2 = cont2._resolve(c2, a)

        async def execute(endpoints, offer_chan):
            eps1, eps2 = split_endpoints(endpoints, c1_len)
            sender, receiver = channel()
            spawn(exec2(eps2, sender))
            await exec1(append_endpoint(eps1, receiver), offer_chan)

        return execute

    return PartialSession("cut", resolve)


def include_session(a: Session, cont) -> PartialSession:
    """Start the closed session `a` concurrently and hand its channel, at a
    freshly generated lens (= the current context length), to `cont`."""
    if not isinstance(a, Session):
        raise ProtocolError(
            f"include_session expects a checked Session to include, got {a!r}"
        )
    once = OneShotContinuation("include_session", cont)

    def resolve(ctx, offer):
        lens = length_of(ctx)
        premise = expect_program(once(lens), "include_session continuation")
        exec_p = premise._resolve(append(ctx, (a.protocol, ())), offer)
        exec_a = a._resolve((), a.protocol)

        async def execute(endpoints, offer_chan):
            sender, receiver = channel()
            spawn(exec_a((), sender))
            await exec_p(append_endpoint(endpoints, receiver), offer_chan)

        return execute

    return PartialSession("include_session", resolve)


def apply_channel(f: Session, a: Session) -> Session:
    """Link a channel-expecting program with a provider for that channel."""
    if not isinstance(f, Session) or not isinstance(a, Session):
        raise ProtocolError(
            "apply_channel expects two checked Sessions "
            f"(got {f!r} and {a!r})"
        )
    if not isinstance(f.protocol, ReceiveChannel):
        raise ProtocolError(
            f"apply_channel: first program must offer ReceiveChannel(A, B), "
            f"got {f.protocol}"
        )
    expected = f.protocol.carried
    if a.protocol != expected:
        raise ProtocolError(
            f"apply_channel: channel program offers {a.protocol}, "
            f"but the consumer expects {expected}"
        )
    from .constructs import send_channel_to

    result = f.protocol.cont
    body = include_session(
        f,
        lambda chan_f: include_session(
            a,
            lambda chan_a: send_channel_to(chan_f, chan_a, forward(chan_f)),
        ),
    )
    return session(result, body)


# -- helpers shared with the other construct modules ----------------------


def resolve_deferred(premise, ctx, offer, rule: str):
    """Check a runtime-produced premise against its recorded judgment."""
    return expect_program(premise, rule)._resolve(ctx, offer)


async def force(value):
    """Await the value if the continuation chose to be asynchronous."""
    if inspect.isawaitable(value):
        return await value
    return value
