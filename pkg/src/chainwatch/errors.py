"""Exception types shared across the chainwatch pipeline."""

from __future__ import annotations


class ChainwatchError(Exception):
    """Base class for all chainwatch domain errors."""


class ParseError(ChainwatchError):
    """A single log line could not be parsed; carries where it came from."""

    def __init__(self, reason: str, origin: str = "", line: int = 0):
        super().__init__(reason)
        self.reason = reason
        self.origin = origin
        self.line = line

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}: {self.reason}"


class MalformedJson(ParseError):
    """Line is not a JSON object."""


class MissingField(ParseError):
    """A required Cowrie attribute is absent."""


class BadTimestamp(ParseError):
    """The timestamp attribute does not parse to a valid instant."""


class FormatVersionMismatch(ChainwatchError):
    """Persisted file has the wrong format tag, version, or is truncated."""


class EmptyTrainingSet(ChainwatchError):
    """No sub-chains were available at any window length."""


class NoModelForLength(ChainwatchError):
    """The model has no prefix table for the requested window length."""


class EmptyPrefixTable(ChainwatchError):
    """The model's prefix table for this window length holds no entries."""


class TooFewSessions(ChainwatchError):
    """A corpus split needs at least two sessions."""


class InsufficientData(ChainwatchError):
    """Not enough windows to run the requested experiment."""


class InvalidSpec(ChainwatchError):
    """A generator spec violates its invariants."""
