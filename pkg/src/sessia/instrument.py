"""Run instrumentation: transcripts, endpoint counters, invocation counters.

A `Recorder` is installed with the `recording()` context manager and is
visible to every task spawned underneath it (it travels through
`contextvars`). The library feeds it three kinds of data:

* transcript events (SEND / RECV / ACQ / REL / END) with stable per-run
  task ids, serializable as ``KIND<TAB>value`` lines;
* endpoint accounting: every channel endpoint created and consumed;
* one-shot accounting: how often each executor and each user continuation
  was invoked.

Demos and tests use the transcript; the conservation checks
(`created == consumed`, all invocation counts == 1) back the library's
linearity claims.
"""

from __future__ import annotations

import asyncio
import contextlib
import contextvars
import itertools
import time
from dataclasses import dataclass, field

EVENT_KINDS = ("SEND", "RECV", "ACQ", "REL", "END")


@dataclass(frozen=True)
class Event:
    seq: int
    timestamp: float
    task: str
    kind: str
    value: str

    def line(self) -> str:
        return f"{self.kind}\t{self.value}"


class Transcript:
    """Append-only ordered log of events for one run or demo."""

    def __init__(self):
        self._events: list[Event] = []

    def append(self, event: Event) -> None:
        self._events.append(event)

    def events(self, kind: str | None = None) -> list[Event]:
        if kind is None:
            return list(self._events)
        return [e for e in self._events if e.kind == kind]

    def values(self, kind: str) -> list[str]:
        return [e.value for e in self._events if e.kind == kind]

    def lines(self) -> list[str]:
        return [e.line() for e in self._events]

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self):
        return iter(self._events)


@dataclass
class Counters:
    endpoints_created: int = 0
    endpoints_consumed: int = 0
    executors: dict[int, int] = field(default_factory=dict)
    continuations: dict[int, int] = field(default_factory=dict)
    channel_events: list[tuple[int, str, str]] = field(default_factory=list)
    polarity_violations: int = 0


class Recorder:
    """Collects one transcript plus counters; thread-tolerant appends."""

    def __init__(self):
        self.transcript = Transcript()
        self.counters = Counters()
        self._seq = itertools.count()
        self._chan_ids = itertools.count()
        self._task_ids: dict[int, str] = {}
        self._task_seq = itertools.count(1)

    # -- transcript ------------------------------------------------------

    def _task_name(self) -> str:
        try:
            task = asyncio.current_task()
        except RuntimeError:
            task = None
        key = id(task) if task is not None else 0
        name = self._task_ids.get(key)
        if name is None:
            # Stable per-run ids in first-seen order, so transcripts are
            # reproducible across processes regardless of asyncio's own
            # global task naming.
            name = f"t{next(self._task_seq)}"
            self._task_ids[key] = name
        return name

    def record(self, kind: str, value: object = "") -> Event:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = Event(
            seq=next(self._seq),
            timestamp=time.monotonic(),
            task=self._task_name(),
            kind=kind,
            value=str(value),
        )
        self.transcript.append(event)
        return event

    # -- endpoint accounting ----------------------------------------------

    def channel_created(self) -> int:
        chan_id = next(self._chan_ids)
        self.counters.endpoints_created += 2
        self.counters.channel_events.append((chan_id, "created", self._task_name()))
        return chan_id

    def endpoint_consumed(self, chan_id: int, side: str) -> None:
        self.counters.endpoints_consumed += 1
        self.counters.channel_events.append((chan_id, side, self._task_name()))

    def polarity_violation(self) -> None:
        self.counters.polarity_violations += 1

    # -- one-shot accounting ----------------------------------------------

    def executor_ran(self, token: int) -> int:
        count = self.counters.executors.get(token, 0) + 1
        self.counters.executors[token] = count
        return count

    def continuation_ran(self, token: int) -> int:
        count = self.counters.continuations.get(token, 0) + 1
        self.counters.continuations[token] = count
        return count

    # -- checks ------------------------------------------------------------

    def conservation_ok(self) -> bool:
        return self.counters.endpoints_created == self.counters.endpoints_consumed

    def one_shot_ok(self) -> bool:
        return all(n == 1 for n in self.counters.executors.values()) and all(
            n == 1 for n in self.counters.continuations.values()
        )


_active: contextvars.ContextVar[Recorder | None] = contextvars.ContextVar(
    "sessia_recorder", default=None
)


def active_recorder() -> Recorder | None:
    return _active.get()


def record_event(kind: str, value: object = "") -> None:
    rec = _active.get()
    if rec is not None:
        rec.record(kind, value)


@contextlib.contextmanager
def recording():
    """Install a fresh Recorder for the dynamic extent of the block."""
    rec = Recorder()
    token = _active.set(rec)
    try:
        yield rec
    finally:
        _active.reset(token)
