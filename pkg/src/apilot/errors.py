"""Exception types shared across the toolkit."""

from __future__ import annotations


class ApilotError(Exception):
    """Base class for all toolkit errors."""


class MalformedVersion(ApilotError):
    """Version text has no leading dotted-integer run."""


class SchemaMismatch(ApilotError):
    """Catalog document carries an unsupported schema_version."""


class CorruptRecord(ApilotError):
    """A catalog record violates an invariant; the message names the record."""


class WrongKind(ApilotError):
    """An operation was applied to a record of the wrong kind."""


class ParseFailure(ApilotError):
    """Source text does not parse; carries the first error location."""

    def __init__(self, message: str, path: str | None = None,
                 line: int | None = None, col: int | None = None):
        location = path or "<snippet>"
        if line is not None:
            location += f":{line}"
            if col is not None:
                location += f":{col}"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line
        self.col = col


class EmptyHistory(ApilotError):
    """No commit in the stream is at or after the requested start date."""


class UnsupportedEcosystem(ApilotError):
    """Advisory targets an ecosystem other than PyPI."""


class MalformedAdvisory(ApilotError):
    """Advisory document is missing required fields or is inconsistent."""


class ExtractionFailed(ApilotError):
    """LLM output contains no complete fenced code block."""


class ClientFailure(ApilotError):
    """LLM client could not produce a response.

    When raised inside a generation loop, ``session`` holds the partial
    GenerationSession accumulated so far.
    """

    def __init__(self, message: str, session=None):
        super().__init__(message)
        self.session = session


class UndefinedReduction(ApilotError):
    """Reduction rate is undefined because the vanilla rate is zero."""
