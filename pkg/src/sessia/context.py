"""The linear context: an ordered, type-level list of channel slots.

A context is a nested pair structure, `()` for the empty list and
`(slot, rest)` for cons, where a slot is either a session type or `Empty`
(a consumed position). Consumed slots are never compacted away, so the
position of every other slot — and hence every lens pointing at it — stays
valid for the whole derivation.

Slots are addressed by de Bruijn levels: zero-sized naturals `Z` and
`S(n)`, which exist as ordinary copyable values so one channel name can be
used at several steps of its protocol. Linearity lives in the slot types,
not in the name. `Z` doubles as the recursion marker of `Fix` bodies, which
is why it is also a `Protocol`.

At runtime a context of length n is mirrored by an endpoints product of the
same shape: `()` per `Empty` slot, a receiving endpoint per live slot.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import LinearityError, ProtocolError
from .protocols import Protocol


class _Empty:
    """A consumed channel position; never communicates."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __str__(self):
        return "Empty"

    def __repr__(self):
        return "Empty"

    def __eq__(self, other):
        return isinstance(other, _Empty)

    def __hash__(self):
        return hash("Empty")


Empty = _Empty()


def is_slot(x) -> bool:
    return isinstance(x, (Protocol, _Empty))


class Nat:
    """Type-level natural used as a context lens; content-free and copyable."""

    level: int

    def __str__(self):
        if self.level == 0:
            return "Z"
        return f"S({self.pred})" if isinstance(self, S) else f"nat({self.level})"

    def __repr__(self):
        return str(self)


class _Z(Nat, Protocol):
    # Z is both lens level zero and the recursion point of Fix bodies.
    level = 0
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def payload_layout(self):
        raise ProtocolError(
            "Z is a recursion marker, not a wire protocol; "
            "apply it to a concrete session type first"
        )

    def __str__(self):
        return "Z"

    def __eq__(self, other):
        return isinstance(other, _Z)

    def __hash__(self):
        return hash("Z")


Z = _Z()


@dataclass(frozen=True)
class S(Nat):
    """Successor lens: delegates access to the tail of the context."""

    pred: Nat

    def __post_init__(self):
        if not isinstance(self.pred, Nat):
            raise ProtocolError(f"S expects a natural, got {self.pred!r}")

    @property
    def level(self) -> int:
        return self.pred.level + 1


def nat(level: int) -> Nat:
    """The lens value at a given de Bruijn level."""
    if level < 0:
        raise ValueError("lens level must be non-negative")
    n: Nat = Z
    for _ in range(level):
        n = S(n)
    return n


def _level(n) -> int:
    if isinstance(n, Nat):
        return n.level
    raise ProtocolError(f"expected a context lens (Z or S(n)), got {n!r}")


# -- structure ---------------------------------------------------------------


def validate_context(c, who: str = "context") -> None:
    while c != ():
        if not (isinstance(c, tuple) and len(c) == 2):
            raise ProtocolError(f"{who}: malformed context {c!r}")
        head, c = c
        if not is_slot(head):
            raise ProtocolError(f"{who}: {head!r} is not a Slot")


def context(slots) -> tuple:
    """Build the nested-pair context from an iterable of slots."""
    c: tuple = ()
    for slot in reversed(list(slots)):
        if not is_slot(slot):
            raise ProtocolError(f"context: {slot!r} is not a Slot")
        c = (slot, c)
    return c


def slots_of(c) -> list:
    out = []
    while c != ():
        head, c = c
        out.append(head)
    return out


def context_str(c) -> str:
    if c == ():
        return "()"
    head, tail = c
    return f"({head}, {context_str(tail)})"


def length(c) -> int:
    n = 0
    while c != ():
        _, c = c
        n += 1
    return n


def length_of(c) -> Nat:
    """Type-level length: Z for nil, S(length_of(tail)) for cons."""
    if c == ():
        return Z
    _, tail = c
    return S(length_of(tail))


def append(c1, c2) -> tuple:
    """c1 ++ c2, preserving order; levels into c1 stay valid."""
    if c1 == ():
        return c2
    head, tail = c1
    return (head, append(tail, c2))


def slot_at(n, c):
    level = _level(n)
    total = length(c)
    if level >= total:
        raise LinearityError(
            f"lens level {level} out of range for context of length {total}"
        )
    for _ in range(level):
        _, c = c
    head, _ = c
    return head


def lens_resolve(n, c, a1, a2) -> tuple:
    """Retype the slot at level `n` from `a1` to `a2`; all other slots stay.

    The focused slot must hold exactly `a1`; anything else is a linearity
    error (slot already consumed, wrong protocol state, or out of range).
    """
    level = _level(n)
    actual = slot_at(n, c)
    if actual != a1:
        raise LinearityError(
            f"lens {level}: slot has type {actual}, expected {a1}"
        )
    return _replace(c, level, a2)


def _replace(c, level: int, slot) -> tuple:
    head, tail = c
    if level == 0:
        return (slot, tail)
    return (head, _replace(tail, level - 1, slot))


def is_empty_context(c) -> bool:
    """True for () and for (Empty, rest) with rest empty."""
    while c != ():
        head, c = c
        if head != Empty:
            return False
    return True


def first_live_slot(c):
    """(level, slot) of the first unconsumed slot, or None."""
    level = 0
    while c != ():
        head, c = c
        if head != Empty:
            return level, head
        level += 1
    return None


def empty_endpoints(c) -> tuple:
    """The all-unit endpoints product of an empty context."""
    if not is_empty_context(c):
        live = first_live_slot(c)
        raise LinearityError(
            f"context {context_str(c)} is not empty: "
            f"slot {live[0]} still holds {live[1]}"
        )
    if c == ():
        return ()
    _, tail = c
    return ((), empty_endpoints(tail))


# -- endpoints products ------------------------------------------------------


def endpoints_at(eps, level: int):
    for _ in range(level):
        _, eps = eps
    head, _ = eps
    return head


def replace_endpoint(eps, level: int, value) -> tuple:
    head, tail = eps
    if level == 0:
        return (value, tail)
    return (head, replace_endpoint(tail, level - 1, value))


def append_endpoint(eps, value) -> tuple:
    if eps == ():
        return (value, ())
    head, tail = eps
    return (head, append_endpoint(tail, value))


def split_endpoints(eps, at: int) -> tuple:
    """Split an endpoints product after `at` components."""
    if at == 0:
        return (), eps
    head, tail = eps
    front, back = split_endpoints(tail, at - 1)
    return (head, front), back
