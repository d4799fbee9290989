"""Errors raised while checking or running session programs.

Checking errors (`SessionTypeError` and subclasses) are raised while a
program is being built or linked, before any task is spawned. Runtime
violations (`RuntimeViolation`) indicate misuse of one-shot resources or a
broken invariant during execution and should be unreachable from well-typed
programs.
"""

from __future__ import annotations


class SessionTypeError(TypeError):
    """A session program does not satisfy its typing judgment."""


class ProtocolError(SessionTypeError):
    """The offered protocol does not match the expected one."""


class LinearityError(SessionTypeError):
    """A linear channel was dropped, duplicated, or used at the wrong type."""


class SharedTypeError(SessionTypeError):
    """A shared session type or shared construct is malformed."""


class RuntimeViolation(RuntimeError):
    """A one-shot resource was reused or an execution invariant broke."""
