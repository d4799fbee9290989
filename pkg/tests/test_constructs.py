import asyncio
import random
import time

import pytest

from conftest import run
from sessia import (
    End,
    ExternalChoice,
    InternalChoice,
    LinearityError,
    ProtocolError,
    ReceiveChannel,
    ReceiveValue,
    SendChannel,
    SendValue,
    Z,
    apply_channel,
    case,
    choose_left,
    choose_right,
    include_session,
    nat,
    offer_choice,
    offer_left,
    offer_right,
    receive_channel,
    receive_channel_from,
    receive_value,
    receive_value_from,
    record_event,
    recording,
    run_session,
    send_channel_from,
    send_channel_to,
    send_value,
    send_value_async,
    send_value_to,
    session,
    terminate,
    wait,
)


def end_provider():
    return session(End, terminate())


def run_recorded(program):
    with recording() as rec:
        run(run_session(program))
    return rec


# -- rule instances: termination ------------------------------------------


def test_terminate_accepts_nil_context():
    run(run_session(session(End, terminate())))


def test_terminate_accepts_consumed_slots():
    body = include_session(end_provider(), lambda x: wait(x, terminate()))
    run(run_session(session(End, body)))


def test_terminate_rejects_live_slot():
    with pytest.raises(LinearityError, match="empty linear context"):
        session(
            ReceiveChannel(End, End),
            receive_channel(lambda a: terminate()),
        )


def test_wait_rejects_reuse_of_consumed_slot():
    with pytest.raises(LinearityError, match="slot has type Empty"):
        session(
            ReceiveChannel(End, End),
            receive_channel(lambda a: wait(a, wait(a, terminate()))),
        )


# -- value I/O -----------------------------------------------------------


def echo_pair(value):
    def on_value(v):
        record_event("RECV", v)
        return terminate()

    provider = session(ReceiveValue(int, End), receive_value(on_value))
    client = session(
        ReceiveChannel(ReceiveValue(int, End), End),
        receive_channel(lambda a: send_value_to(a, value, wait(a, terminate()))),
    )
    return client, provider


def test_receive_value_identity_on_random_values():
    rng = random.Random(20240817)
    values = [rng.randrange(2**64) for _ in range(100)]
    for value in values:
        with recording() as rec:
            client, provider = echo_pair(value)
            run(run_session(apply_channel(client, provider)))
        assert rec.transcript.values("RECV") == [str(value)]


def test_send_value_to_checks_declared_type():
    with pytest.raises(ProtocolError, match="not of declared type int"):
        echo_pair("not an int")


def test_send_value_to_rejects_wrong_slot_state():
    with pytest.raises(ProtocolError, match="expected a ReceiveValue step"):
        session(
            ReceiveChannel(End, End),
            receive_channel(lambda a: send_value_to(a, 1, wait(a, terminate()))),
        )


def test_sequential_sends_deliver_in_order():
    rng = random.Random(7)
    values = [rng.randrange(1000) for _ in range(8)]

    proto = End
    for _ in values:
        proto = ReceiveValue(int, proto)

    def provider_body(remaining):
        if remaining == 0:
            return terminate()

        def on_value(v):
            record_event("RECV", v)
            return provider_body(remaining - 1)

        return receive_value(on_value)

    def client_body(a):
        prog = wait(a, terminate())
        for v in reversed(values):
            prog = send_value_to(a, v, prog)
        return prog

    provider = session(proto, provider_body(len(values)))
    client = session(ReceiveChannel(proto, End), receive_channel(client_body))
    with recording() as rec:
        run(run_session(apply_channel(client, provider)))
    assert [int(v) for v in rec.transcript.values("RECV")] == values


def int_source(value):
    return session(SendValue(int, End), send_value(value, terminate()))


def consume_int(source):
    def on_value(v):
        record_event("RECV", v)
        return wait(Z, terminate())

    return session(
        End, include_session(source, lambda x: receive_value_from(x, on_value))
    )


def test_send_value_and_receive_value_from_round_trip():
    rec = run_recorded(consume_int(int_source(42)))
    assert rec.transcript.values("RECV") == ["42"]
    assert rec.conservation_ok()


def test_send_value_checks_declared_type():
    with pytest.raises(ProtocolError, match="not of declared type"):
        session(SendValue(int, End), send_value("nope", terminate()))


def test_receive_value_from_rejects_wrong_slot():
    with pytest.raises(ProtocolError, match="expected a SendValue step"):
        consume_int(end_provider())


def test_async_continuations_are_awaited():
    async def on_value(v):
        await asyncio.sleep(0)
        record_event("RECV", v)
        return wait(Z, terminate())

    program = session(
        End,
        include_session(int_source(5), lambda x: receive_value_from(x, on_value)),
    )
    rec = run_recorded(program)
    assert rec.transcript.values("RECV") == ["5"]


# -- lazy production ----------------------------------------------------------


def test_producer_effects_do_not_happen_before_run():
    produced = []

    async def produce():
        produced.append(True)
        return 9, terminate()

    program = session(SendValue(int, End), send_value_async(produce))
    linked = consume_int(program)
    assert produced == []  # building and linking ran no producer code
    rec = run_recorded(linked)
    assert produced == [True]
    assert rec.transcript.values("RECV") == ["9"]


def test_send_value_async_equivalent_to_send_value_when_immediate():
    async def produce():
        return 3, terminate()

    eager = consume_int(int_source(3))
    lazy = consume_int(session(SendValue(int, End), send_value_async(produce)))
    with recording() as rec_eager:
        run(run_session(eager))
    with recording() as rec_lazy:
        run(run_session(lazy))
    assert rec_eager.transcript.lines() == rec_lazy.transcript.lines()
    assert (
        rec_eager.counters.endpoints_created == rec_lazy.counters.endpoints_created
    )


def test_producer_values_arrive_after_declared_delay():
    async def produce():
        await asyncio.sleep(0.05)
        return 1, terminate()

    started = time.monotonic()
    rec = run_recorded(
        consume_int(session(SendValue(int, End), send_value_async(produce)))
    )
    recv = rec.transcript.events("RECV")[0]
    assert recv.timestamp - started >= 0.05


# -- channel delegation -------------------------------------------------------


def test_receive_channel_lens_levels():
    seen = []

    def outer(a):
        seen.append(a.level)

        def inner(b):
            seen.append(b.level)
            return wait(a, wait(b, terminate()))

        return receive_channel(inner)

    program = session(
        ReceiveChannel(End, ReceiveChannel(End, End)), receive_channel(outer)
    )
    step1 = apply_channel(program, end_provider())
    step2 = apply_channel(step1, end_provider())
    run(run_session(step2))
    assert seen == [0, 1]


def test_delegation_three_task_trace():
    # a delegator hands its private value source to the client
    inner = int_source(5)
    delegator = session(
        SendChannel(SendValue(int, End), End),
        include_session(inner, lambda x: send_channel_from(x, terminate())),
    )

    def body(d):
        def got_channel(v):
            def on_value(value):
                record_event("RECV", value)
                return wait(v, wait(d, terminate()))

            return receive_value_from(v, on_value)

        return receive_channel_from(d, got_channel)

    program = session(End, include_session(delegator, body))
    rec = run_recorded(program)
    assert rec.transcript.values("RECV") == ["5"]
    tasks = {e.task for e in rec.transcript}
    assert len(tasks) == 3  # client, delegator, and the delegated source
    assert rec.conservation_ok()


def test_receive_channel_from_appends_at_context_length():
    seen = []
    inner = int_source(1)
    delegator = session(
        SendChannel(SendValue(int, End), End),
        include_session(inner, lambda x: send_channel_from(x, terminate())),
    )

    def body(d):
        def got_channel(v):
            seen.append(v.level)
            return receive_value_from(
                v, lambda _: wait(v, wait(d, terminate()))
            )

        return receive_channel_from(d, got_channel)

    run(run_session(session(End, include_session(delegator, body))))
    assert seen == [1]


def test_send_channel_from_empties_the_slot():
    with pytest.raises(LinearityError, match="slot has type Empty"):
        session(
            SendChannel(End, End),
            include_session(
                end_provider(),
                lambda x: send_channel_from(x, wait(x, terminate())),
            ),
        )


def test_send_channel_to_slot_unusable_afterwards():
    # the delegated slot holds Empty, so waiting on it is rejected
    with pytest.raises(LinearityError, match="slot has type Empty"):
        session(
            ReceiveChannel(ReceiveChannel(End, End), End),
            receive_channel(
                lambda f: include_session(
                    end_provider(),
                    lambda a: send_channel_to(f, a, wait(f, wait(a, terminate()))),
                )
            ),
        )


# -- external choice ---------------------------------------------------------


def choice_provider():
    return session(
        ExternalChoice(SendValue(int, End), End),
        offer_choice(send_value(1, terminate()), terminate()),
    )


def test_choose_left_runs_only_left_branch():
    def body(x):
        def on_value(v):
            record_event("RECV", v)
            return wait(x, terminate())

        return choose_left(x, receive_value_from(x, on_value))

    rec = run_recorded(
        session(End, include_session(choice_provider(), body))
    )
    assert rec.transcript.values("RECV") == ["1"]


def test_choose_right_runs_only_right_branch():
    rec = run_recorded(
        session(
            End,
            include_session(
                choice_provider(), lambda x: choose_right(x, wait(x, terminate()))
            ),
        )
    )
    assert rec.transcript.values("RECV") == []
    assert rec.conservation_ok()


def test_offer_choice_branches_must_type_against_same_context():
    # right branch drops the live slot the left branch consumes
    with pytest.raises(LinearityError, match="empty linear context"):
        session(
            ReceiveChannel(End, ExternalChoice(End, End)),
            receive_channel(
                lambda a: offer_choice(wait(a, terminate()), terminate())
            ),
        )


def test_offer_choice_branch_protocol_mismatch():
    with pytest.raises(ProtocolError, match="terminate offers End"):
        session(
            ExternalChoice(SendValue(int, End), End),
            offer_choice(terminate(), terminate()),
        )


def test_choosing_on_non_choice_slot():
    with pytest.raises(ProtocolError, match="expected an ExternalChoice"):
        session(
            End,
            include_session(
                end_provider(), lambda x: choose_left(x, wait(x, terminate()))
            ),
        )


# -- internal choice ----------------------------------------------------------


def internal_choice_client(source):
    def body(x):
        def on_value(v):
            record_event("RECV", v)
            return wait(x, terminate())

        left = receive_value_from(x, on_value)
        right = wait(x, terminate())
        return case(x, left, right)

    return session(End, include_session(source, body))


def internal_provider(side):
    proto = InternalChoice(SendValue(int, End), End)
    if side == "left":
        return session(proto, offer_left(send_value(7, terminate())))
    return session(proto, offer_right(terminate()))


def test_case_handles_left_tag():
    rec = run_recorded(internal_choice_client(internal_provider("left")))
    assert rec.transcript.values("RECV") == ["7"]


def test_case_handles_right_tag():
    rec = run_recorded(internal_choice_client(internal_provider("right")))
    assert rec.transcript.values("RECV") == []


def test_offer_left_requires_left_branch_protocol():
    with pytest.raises(ProtocolError, match="terminate offers End"):
        session(
            InternalChoice(SendValue(int, End), End),
            offer_left(terminate()),
        )


def test_case_branch_contexts_differ_only_at_the_slot():
    # against a provider whose right branch also sends, the client's
    # right branch (which waits immediately) is rejected at that slot
    provider = session(
        InternalChoice(SendValue(int, End), SendValue(int, End)),
        offer_right(send_value(1, terminate())),
    )
    with pytest.raises(LinearityError, match="slot has type SendValue"):
        internal_choice_client(provider)


def test_case_on_non_internal_choice_slot():
    with pytest.raises(ProtocolError, match="expected an InternalChoice"):
        session(
            End,
            include_session(
                end_provider(),
                lambda x: case(x, wait(x, terminate()), wait(x, terminate())),
            ),
        )


# -- wait ordering -------------------------------------------------------------


def test_wait_continuation_starts_after_provider_end():
    async def produce():
        await asyncio.sleep(0.03)
        return 2, terminate()

    slow = session(SendValue(int, End), send_value_async(produce))
    rec = run_recorded(consume_int(slow))
    ends = rec.transcript.events("END")
    # provider's END is recorded before the client's final END
    assert len(ends) == 2
    assert ends[0].seq < ends[1].seq
    assert ends[0].task != ends[1].task
