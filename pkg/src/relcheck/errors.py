"""Exception hierarchy shared by every relcheck module."""

from __future__ import annotations


class RelcheckError(Exception):
    """Base class for all errors raised by relcheck."""


class StateSpaceError(RelcheckError):
    """Malformed state space or a state that does not belong to it."""


class SpaceMismatchError(RelcheckError):
    def __init__(self, left, right):
        self.left = left
        self.right = right
        super().__init__(
            f"relations live on different spaces: {left.describe()} vs {right.describe()}"
        )


class CapExceededError(RelcheckError):
    """Exhaustive computation would exceed the configured state-count cap."""

    def __init__(self, message, size=None, cap=None):
        self.size = size
        self.cap = cap
        super().__init__(message)


class ParseError(RelcheckError):
    def __init__(self, message, line=None, col=None, source=None):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        super().__init__(self.location() + message)

    def location(self):
        parts = [p for p in (self.source, self.line, self.col) if p is not None]
        if not parts:
            return ""
        return ":".join(str(p) for p in parts) + ": "

    def with_source(self, source):
        return ParseError(self.message, self.line, self.col, source)


class ScopeError(ParseError):
    """Undeclared variable, shadowing, or a primed name where none is allowed."""


class NonDeterministicError(RelcheckError):
    """A deterministic-only judgment was applied to a non-deterministic relation."""


class InconsistencyError(RelcheckError):
    """Two independent evaluation routes disagreed; this is always a bug."""


class InconclusiveError(RelcheckError):
    """A result depends on fuel or witness bounds that were too small to decide."""
