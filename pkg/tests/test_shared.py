import asyncio
import gc

import pytest

from conftest import run
from sessia import (
    End,
    LinearToShared,
    ProtocolError,
    SendValue,
    SharedToLinear,
    SharedTypeError,
    Z,
    accept_shared_session,
    acquire_shared_session,
    detach_shared_session,
    nat,
    receive_value_from,
    record_event,
    recording,
    release_shared_session,
    run_session,
    run_shared_session,
    send_value,
    send_value_async,
    session,
    shared_session,
    shared_type_apply,
    terminate,
    wait,
)
from sessia.demos import (
    SharedCounter,
    shared_counter_client,
    shared_counter_demo,
    shared_counter_provider,
)


# -- shared type formation ---------------------------------------------------


def test_shared_body_unrolls_to_release_step():
    unrolled = SharedCounter.unroll()
    assert unrolled == SendValue(int, SharedToLinear(SendValue(int, Z)))


def test_shared_type_apply_rejects_end_leaf():
    with pytest.raises(SharedTypeError, match="strictly equi-synchronizing"):
        shared_type_apply(SendValue(int, End), SharedToLinear(End))


def test_linear_to_shared_rejects_terminating_body():
    with pytest.raises(SharedTypeError, match="strictly equi-synchronizing"):
        LinearToShared(SendValue(int, End))


def test_linear_to_shared_rejects_end_body():
    with pytest.raises(SharedTypeError, match="strictly equi-synchronizing"):
        LinearToShared(End)


# -- accept / detach typing ----------------------------------------------------


def test_accept_body_that_never_detaches_is_rejected():
    # the body's offered type can never reach the release step
    with pytest.raises(ProtocolError, match="terminate offers End"):
        shared_session(
            SharedCounter,
            accept_shared_session(send_value(0, terminate())),
        )


def test_accept_with_out_of_range_lens_is_rejected():
    with pytest.raises(Exception, match="out of range"):
        shared_session(
            SharedCounter,
            accept_shared_session(send_value(0, wait(nat(1), terminate()))),
        )


def test_detach_requires_lock_at_slot_zero():
    # a detach outside a critical section has no lock in its context
    with pytest.raises(ProtocolError, match="critical-section lock"):
        session(
            SharedToLinear(SendValue(int, Z)),
            detach_shared_session(shared_counter_provider(0)),
        )


def test_detach_requires_matching_shared_continuation():
    # a provider that tries to continue at a different shared type is
    # rejected when its critical section is served
    other = LinearToShared(SendValue(str, Z))

    def other_provider():
        async def produce():
            return "x", detach_shared_session(other_provider())

        return shared_session(other, accept_shared_session(send_value_async(produce)))

    def mismatched_provider():
        async def produce():
            return 0, detach_shared_session(other_provider())

        return shared_session(
            SharedCounter, accept_shared_session(send_value_async(produce))
        )

    async def main():
        chan = run_shared_session(mismatched_provider())
        state = chan._state
        with pytest.raises(ProtocolError, match="continuation offers"):
            await run_session(shared_counter_client(chan.clone()))
        del chan
        gc.collect()
        await asyncio.wait_for(state.stopped.wait(), 5)
        assert state.failure is not None

    run(main())


def test_detach_expects_a_checked_shared_session():
    with pytest.raises(ProtocolError, match="checked SharedSession"):
        detach_shared_session(terminate())


# -- acquire / release typing ---------------------------------------------------


def test_acquire_requires_a_shared_channel():
    with pytest.raises(ProtocolError, match="expects a SharedChannel"):
        acquire_shared_session(
            session(End, terminate()), lambda c: wait(c, terminate())
        )


def test_release_before_release_point_is_rejected():
    async def main():
        chan = run_shared_session(shared_counter_provider(0))
        try:
            with pytest.raises(ProtocolError, match="not reached its release point"):
                session(
                    End,
                    acquire_shared_session(
                        chan, lambda c: release_shared_session(c, terminate())
                    ),
                )
        finally:
            state = chan._state
            del chan
            gc.collect()
            await asyncio.wait_for(state.stopped.wait(), 5)

    run(main())


def test_released_slot_cannot_be_reused():
    # releasing twice is caught when the continuation is checked; the
    # abandoned critical section then collapses the shared process too
    async def main():
        chan = run_shared_session(shared_counter_provider(0))
        state = chan._state

        def body(c):
            def on_value(v):
                return release_shared_session(
                    c, release_shared_session(c, terminate())
                )

            return receive_value_from(c, on_value)

        prog = session(End, acquire_shared_session(chan.clone(), body))
        del chan
        with pytest.raises(ProtocolError, match="not reached its release point"):
            await run_session(prog)
        gc.collect()
        await asyncio.wait_for(state.stopped.wait(), 5)

    run(main())


# -- runtime behavior ----------------------------------------------------------


def test_shared_counter_two_clients_unique_values():
    transcript = shared_counter_demo(2)
    assert sorted(int(v) for v in transcript.values("RECV")) == [0, 1]


def test_critical_sections_are_disjoint():
    transcript = shared_counter_demo(4)
    intervals = []
    open_acq = {}
    for event in transcript:
        if event.kind == "ACQ":
            open_acq[event.task] = event.seq
        elif event.kind == "REL":
            intervals.append((open_acq.pop(event.task), event.seq))
    assert len(intervals) == 4
    intervals.sort()
    for (a1, r1), (a2, r2) in zip(intervals, intervals[1:]):
        assert r1 < a2  # no overlap, not even touching


def test_fifo_service_order_follows_launch_order():
    transcript = shared_counter_demo(3)
    recvs = [int(v) for v in transcript.values("RECV")]
    assert recvs == [0, 1, 2]  # FIFO queue + fixed launch order


def test_transcripts_reproducible_across_runs():
    lines = [shared_counter_demo(3).lines() for _ in range(3)]
    assert lines[0] == lines[1] == lines[2]


def test_clone_then_drop_original_still_works():
    async def main():
        chan = run_shared_session(shared_counter_provider(0))
        state = chan._state
        clone = chan.clone()
        del chan
        gc.collect()
        await run_session(shared_counter_client(clone))
        del clone
        gc.collect()
        await asyncio.wait_for(state.stopped.wait(), 5)

    with recording() as rec:
        run(main())
    assert rec.transcript.values("RECV") == ["0"]


def test_zero_clients_process_stops_cleanly():
    async def main():
        chan = run_shared_session(shared_counter_provider(0))
        state = chan._state
        del chan
        gc.collect()
        await asyncio.wait_for(state.stopped.wait(), 5)
        assert state.failure is None

    run(main())


def test_two_sequential_acquires_from_one_client_program():
    # one client acquires twice in a row; counts advance across sections
    def client(chan):
        def first(c):
            def on_value(v):
                record_event("RECV", v)
                return release_shared_session(
                    c,
                    acquire_shared_session(chan.clone(), second),
                )

            return receive_value_from(c, on_value)

        def second(c):
            def on_value(v):
                record_event("RECV", v)
                return release_shared_session(c, terminate())

            return receive_value_from(c, on_value)

        return session(End, acquire_shared_session(chan, first))

    async def main():
        chan = run_shared_session(shared_counter_provider(10))
        state = chan._state
        await run_session(client(chan.clone()))
        del chan
        gc.collect()
        await asyncio.wait_for(state.stopped.wait(), 5)

    with recording() as rec:
        run(main())
    assert [int(v) for v in rec.transcript.values("RECV")] == [10, 11]


def test_second_acquire_lens_accounts_for_consumed_slot():
    # acquiring inside a context that still tracks a consumed slot appends
    # the new channel after it
    seen = []

    def client(chan):
        def first(c):
            def on_value(v):
                return release_shared_session(
                    c, acquire_shared_session(chan.clone(), second)
                )

            return receive_value_from(c, on_value)

        def second(c):
            seen.append(c.level)

            def on_value(v):
                return release_shared_session(c, terminate())

            return receive_value_from(c, on_value)

        return session(End, acquire_shared_session(chan, first))

    async def main():
        chan = run_shared_session(shared_counter_provider(0))
        state = chan._state
        await run_session(client(chan.clone()))
        del chan
        gc.collect()
        await asyncio.wait_for(state.stopped.wait(), 5)

    run(main())
    assert seen == [1]


def test_shared_process_failure_propagates_to_acquirers():
    boom = LinearToShared(SendValue(int, Z))

    def bad_provider():
        async def produce():
            raise RuntimeError("provider exploded")

        return shared_session(boom, accept_shared_session(send_value_async(produce)))

    async def main():
        chan = run_shared_session(bad_provider())
        state = chan._state
        with pytest.raises(RuntimeError, match="provider exploded"):
            await run_session(shared_counter_client(chan.clone()))
        del chan
        gc.collect()
        await asyncio.wait_for(state.stopped.wait(), 5)
        assert state.failure is not None

    run(main())
