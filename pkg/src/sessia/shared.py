"""Shared session types: acquire/release with a background shared process.

A shared protocol `LinearToShared(body)` is inherently recursive: every
client that acquires it gets the same linear critical section, and the
section must end by releasing back to the very same shared type (strict
equi-synchronization). That constraint is enforced structurally:
`shared_type_apply` has no rule for `End`, so a body whose recursion
position could terminate simply cannot form a shared type.

At runtime one background task owns the shared process. It serves acquire
requests strictly FIFO, runs each critical section on its own task, and
only moves to the next request after the releasing client has acknowledged
the release — so critical sections never overlap. The `Lock` slot is the
runtime witness of being inside a critical section: `accept` plants it at
slot 0 and `detach` consumes it to hand the continuation of the shared
process back to the loop.

Dropping every `SharedChannel` clone lets the loop exit once no acquire is
pending.
"""

from __future__ import annotations

import asyncio
import inspect
import weakref
from collections import deque
from dataclasses import dataclass

from .context import (
    append,
    append_endpoint,
    context_str,
    endpoints_at,
    first_live_slot,
    is_empty_context,
    length,
    length_of,
    lens_resolve,
    replace_endpoint,
    slot_at,
    Empty,
    Z,
    _Z,
    S,
)
from .core import (
    OneShotContinuation,
    PartialSession,
    expect_program,
    resolve_deferred,
)
from .errors import (
    LinearityError,
    ProtocolError,
    RuntimeViolation,
    SharedTypeError,
)
from .instrument import record_event
from .protocols import (
    ExternalChoice,
    InternalChoice,
    PayloadLayout,
    PayloadPart,
    Protocol,
    ReceiveChannel,
    ReceiveValue,
    SendChannel,
    SendValue,
    SharedProtocol,
    _End,
    check_protocol,
)
from .recursion import Fix
from .runtime import ACK, channel, current_run


@dataclass(frozen=True)
class SharedToLinear(Protocol):
    """Release step: ends a critical section, zero payload on the wire."""

    body: Protocol

    def payload_layout(self):
        return PayloadLayout("reversed", (PayloadPart("release-ack"),))

    def __str__(self):
        return f"SharedToLinear({self.body})"


@dataclass(frozen=True)
class Lock(Protocol):
    """Critical-section token occupying slot 0 between accept and detach."""

    body: Protocol

    def payload_layout(self):
        raise ProtocolError("Lock is an internal token and never communicates")

    def __str__(self):
        return f"Lock({self.body})"


def shared_type_apply(f: Protocol, x: Protocol) -> Protocol:
    """Substitute `x` at the recursion position of a shared session body.

    Unlike plain type application there is deliberately no rule for `End`:
    every path through the body must reach the recursion position, i.e. the
    release point.
    """
    if isinstance(f, _Z):
        return x
    if isinstance(f, S):
        raise SharedTypeError(
            "multi-level recursion markers are not supported in shared bodies"
        )
    if isinstance(f, _End):
        raise SharedTypeError(
            "not strictly equi-synchronizing: End cannot appear at the "
            "recursion position of a shared session body; every path must "
            "release back to the shared type"
        )
    if isinstance(f, Fix):
        raise SharedTypeError(
            "not strictly equi-synchronizing: a nested fixed point cannot "
            "sit at the recursion position of a shared session body"
        )
    if isinstance(f, ReceiveValue):
        return ReceiveValue(f.value_type, shared_type_apply(f.cont, x))
    if isinstance(f, SendValue):
        return SendValue(f.value_type, shared_type_apply(f.cont, x))
    if isinstance(f, ReceiveChannel):
        return ReceiveChannel(f.carried, shared_type_apply(f.cont, x))
    if isinstance(f, SendChannel):
        return SendChannel(f.carried, shared_type_apply(f.cont, x))
    if isinstance(f, ExternalChoice):
        return ExternalChoice(
            shared_type_apply(f.left, x), shared_type_apply(f.right, x)
        )
    if isinstance(f, InternalChoice):
        return InternalChoice(
            shared_type_apply(f.left, x), shared_type_apply(f.right, x)
        )
    if isinstance(f, SharedToLinear):
        return f
    raise SharedTypeError(f"shared_type_apply: no rule for {f!r}")


@dataclass(frozen=True)
class LinearToShared(SharedProtocol):
    """Shared session type: acquire, run the linear body, release, repeat."""

    body: Protocol

    def __post_init__(self):
        check_protocol(self.body, "LinearToShared body")
        # Form the unrolling now: malformed bodies (e.g. an End leaf) are
        # rejected at type formation.
        shared_type_apply(self.body, SharedToLinear(self.body))

    def unroll(self) -> Protocol:
        return shared_type_apply(self.body, SharedToLinear(self.body))

    def __str__(self):
        return f"LinearToShared({self.body})"


# -- shared program values -----------------------------------------------


class SharedSessionBuilder:
    """Unchecked shared program; becomes a SharedSession via shared_session."""

    def __init__(self, rule: str, resolve_fn):
        self._rule = rule
        self._resolve_fn = resolve_fn
        self._consumed = False

    def _resolve(self, protocol: LinearToShared):
        if self._consumed:
            raise LinearityError(
                f"{self._rule}: shared program value already consumed"
            )
        self._consumed = True
        return self._resolve_fn(protocol)


class SharedSession:
    """A checked shared program; single-use, inert until run."""

    def __init__(self, protocol: LinearToShared, runner):
        self._protocol = protocol
        self._runner = runner

    @property
    def protocol(self) -> LinearToShared:
        return self._protocol

    def _take_runner(self):
        if self._runner is None:
            raise LinearityError("shared session program already consumed")
        runner, self._runner = self._runner, None
        return runner

    def __repr__(self):
        return f"<SharedSession {self._protocol}>"


def shared_session(protocol: LinearToShared, program) -> SharedSession:
    """Check a shared program against the shared protocol it must offer."""
    if not isinstance(protocol, LinearToShared):
        raise SharedTypeError(
            f"shared_session: expected a LinearToShared protocol, got {protocol!r}"
        )
    if isinstance(program, SharedSession):
        if program.protocol != protocol:
            raise ProtocolError(
                f"shared session offers {program.protocol}, "
                f"but the expected protocol here is {protocol}"
            )
        return program
    if not isinstance(program, SharedSessionBuilder):
        raise ProtocolError(
            f"shared_session: expected a shared program "
            f"(accept_shared_session(...)), got {program!r}"
        )
    return SharedSession(protocol, program._resolve(protocol))


def accept_shared_session(cont) -> SharedSessionBuilder:
    """Accept one acquire: run `cont` as the critical section, holding the
    lock token at slot 0 and offering the unrolled shared body."""
    expect_program(cont, "accept_shared_session")

    def resolve(protocol):
        body_protocol = protocol.unroll()
        exec_body = cont._resolve((Lock(protocol.body), ()), body_protocol)

        async def runner(lock_sender, offer_sender):
            await exec_body((lock_sender, ()), offer_sender)

        return runner

    return SharedSessionBuilder("accept_shared_session", resolve)


def detach_shared_session(cont: SharedSession) -> PartialSession:
    """End the critical section: acknowledge the client's release and hand
    the continuation of the shared process back to its loop."""
    if not isinstance(cont, SharedSession):
        raise ProtocolError(
            f"detach_shared_session expects a checked SharedSession "
            f"to continue with, got {cont!r}"
        )

    def resolve(ctx, offer):
        if not isinstance(offer, SharedToLinear):
            raise ProtocolError(
                f"detach_shared_session offers SharedToLinear, "
                f"but the expected protocol here is {offer}"
            )
        lock = Lock(offer.body)
        if length(ctx) == 0 or slot_at(Z, ctx) != lock:
            raise ProtocolError(
                "detach_shared_session requires the critical-section lock "
                f"at slot 0 of {context_str(ctx)}"
            )
        rest = ctx[1]
        if not is_empty_context(rest):
            live = first_live_slot(rest)
            raise LinearityError(
                f"detach_shared_session requires all other channels consumed; "
                f"slot {live[0] + 1} still holds {live[1]}"
            )
        expected = LinearToShared(offer.body)
        if cont.protocol != expected:
            raise ProtocolError(
                f"detach_shared_session: continuation offers {cont.protocol}, "
                f"expected {expected}"
            )

        async def execute(endpoints, offer_chan):
            lock_sender = endpoints_at(endpoints, 0)
            sender, receiver = channel()
            offer_chan.send(sender)
            await receiver.recv()  # client's release acknowledgement
            lock_sender.send(cont)

        return execute

    return PartialSession("detach_shared_session", resolve)


def acquire_shared_session(shared: SharedChannel, cont) -> PartialSession:
    """Wait for exclusive access to the shared process; the linear body
    channel is appended to the context and `cont` gets its lens."""
    if not isinstance(shared, SharedChannel):
        raise ProtocolError(
            f"acquire_shared_session expects a SharedChannel, got {shared!r}"
        )
    once = OneShotContinuation("acquire_shared_session", cont)

    def resolve(ctx, offer):
        body_protocol = shared.protocol.unroll()
        premise_ctx = append(ctx, (body_protocol, ()))
        produced = once(length_of(ctx))
        deferred = inspect.isawaitable(produced)
        exec_p = None
        if not deferred:
            exec_p = expect_program(
                produced, "acquire_shared_session continuation"
            )._resolve(premise_ctx, offer)

        async def execute(endpoints, offer_chan):
            nonlocal exec_p
            sender, receiver = channel()
            shared._request(sender)
            linear = await receiver.recv()
            if isinstance(linear, _PoisonPill):
                raise RuntimeViolation(
                    "shared process failed before this acquire was served"
                ) from linear.exc
            record_event("ACQ")
            # While this client holds the critical section, a crash of the
            # shared process must abort this run rather than strand it.
            shared._state.active_run = current_run()
            if exec_p is None:
                premise = await produced
                exec_p = resolve_deferred(
                    premise, premise_ctx, offer, "acquire_shared_session continuation"
                )
            await exec_p(append_endpoint(endpoints, linear), offer_chan)

        return execute

    return PartialSession("acquire_shared_session", resolve)


def release_shared_session(n, cont) -> PartialSession:
    """Give up the critical section at slot `n`; the slot is consumed and
    the shared process becomes available to the next client."""
    expect_program(cont, "release_shared_session")

    def resolve(ctx, offer):
        slot = slot_at(n, ctx)
        if not isinstance(slot, SharedToLinear):
            raise ProtocolError(
                f"release_shared_session: lens {n.level}: slot has type {slot}; "
                f"the session has not reached its release point"
            )
        target = lens_resolve(n, ctx, slot, Empty)
        exec_cont = cont._resolve(target, offer)
        level = n.level

        async def execute(endpoints, offer_chan):
            outbound = await endpoints_at(endpoints, level).recv()
            record_event("REL")
            outbound.send(ACK)
            await exec_cont(replace_endpoint(endpoints, level, ()), offer_chan)

        return execute

    return PartialSession("release_shared_session", resolve, synth_protocol=cont._synth)


# -- the shared process --------------------------------------------------


class _PoisonPill:
    __slots__ = ("exc",)

    def __init__(self, exc):
        self.exc = exc


class _SharedState:
    def __init__(self, protocol: LinearToShared):
        self.protocol = protocol
        self.requests: deque = deque()
        self.live_clones = 0
        self.loop = asyncio.get_running_loop()
        self.stopped = asyncio.Event()
        self.failure: BaseException | None = None
        self.task: asyncio.Task | None = None
        self.active_run = None
        self._waiter: asyncio.Future | None = None

    def _wake(self):
        if self._waiter is not None and not self._waiter.done():
            self._waiter.set_result(None)

    def push_request(self, resp_sender):
        self.requests.append(resp_sender)
        self._wake()

    def clone_created(self):
        self.live_clones += 1

    def clone_dropped(self):
        # May run from a GC finalizer; only schedule, never touch the loop.
        self.live_clones -= 1
        if self.live_clones <= 0:
            try:
                self.loop.call_soon_threadsafe(self._wake)
            except RuntimeError:
                pass

    async def next_request(self):
        while True:
            if self.requests:
                return self.requests.popleft()
            if self.live_clones <= 0:
                return None
            waiter = self.loop.create_future()
            self._waiter = waiter
            # Re-check after publishing the waiter: a clone may have died
            # between the check above and now.
            if (self.requests or self.live_clones <= 0) and not waiter.done():
                waiter.set_result(None)
            await waiter
            self._waiter = None


async def _serve(state: _SharedState, first: SharedSession):
    current = first
    try:
        while True:
            request = await state.next_request()
            if request is None:
                break
            runner = current._take_runner()
            lock_sender, lock_receiver = channel()
            linear_sender, linear_receiver = channel()
            request.send(linear_receiver)
            # The critical section runs here, on the shared process's task.
            await runner(lock_sender, linear_sender)
            following = await lock_receiver.recv()
            if (
                not isinstance(following, SharedSession)
                or following.protocol != state.protocol
            ):
                raise RuntimeViolation(
                    "shared process: detach handed back a mismatched continuation"
                )
            current = following
    except BaseException as exc:
        state.failure = exc
        while state.requests:
            state.requests.popleft().send(_PoisonPill(exc))
        if state.active_run is not None:
            state.active_run.fail(exc)
        raise
    finally:
        state.stopped.set()


class SharedChannel:
    """Clonable, thread-safe alias to a running shared process.

    Clones are interchangeable; once every clone is gone and no acquire is
    pending, the background process stops.
    """

    def __init__(self, state: _SharedState):
        self._state = state
        state.clone_created()
        self._finalizer = weakref.finalize(self, state.clone_dropped)

    @property
    def protocol(self) -> LinearToShared:
        return self._state.protocol

    def clone(self) -> SharedChannel:
        return SharedChannel(self._state)

    def __copy__(self):
        return self.clone()

    def _request(self, resp_sender):
        if self._state.failure is not None:
            raise RuntimeViolation(
                "shared process already failed"
            ) from self._state.failure
        self._state.push_request(resp_sender)

    def __repr__(self):
        return f"<SharedChannel {self._state.protocol}>"


def run_shared_session(s: SharedSession) -> SharedChannel:
    """Start the shared process in the background; returns the channel that
    clients use to acquire it. Must be called with an event loop running."""
    if not isinstance(s, SharedSession):
        raise ProtocolError(
            f"run_shared_session expects a checked SharedSession "
            f"(build one with shared_session(S, ...)), got {s!r}"
        )
    state = _SharedState(s.protocol)
    state.task = asyncio.get_running_loop().create_task(_serve(state, s))
    # the failure is reported through poisoned acquires / the active run;
    # retrieve it here so the loop task never warns about it
    state.task.add_done_callback(
        lambda t: t.exception() if not t.cancelled() else None
    )
    return SharedChannel(state)
