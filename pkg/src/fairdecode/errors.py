"""Exception hierarchy for fairdecode.

Parse errors carry enough context to drive the retry policy; backend
errors split retryable transport problems from terminal ones.
"""

from __future__ import annotations


class FairdecodeError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FairdecodeError):
    """An operation was called on values outside its domain."""


class GenerationEmpty(FairdecodeError):
    """The generator reply contained no usable word after stripping."""


class SelectionFailure(FairdecodeError):
    """Best-of-N had no non-empty candidates to choose from."""


# -- judge / audit reply parsing ---------------------------------------------

class JudgeParseError(FairdecodeError):
    """A single judge reply could not be parsed (retryable)."""


class NoJsonFound(JudgeParseError):
    pass


class MissingField(JudgeParseError):
    def __init__(self, field: str):
        super().__init__(f"missing or non-numeric field: {field}")
        self.field = field


class OutOfRange(JudgeParseError):
    def __init__(self, field: str, value: float):
        super().__init__(f"field {field} out of [0,1]: {value}")
        self.field = field
        self.value = value


class JudgeParseFailure(FairdecodeError):
    """Terminal: every retry of a judge call failed to parse."""

    def __init__(self, last_error: JudgeParseError, attempts: int):
        super().__init__(f"judge reply unparseable after {attempts} attempts: {last_error}")
        self.last_error = last_error
        self.attempts = attempts


class AuditParseError(FairdecodeError):
    """A single audit reply could not be parsed (retryable)."""


class GateParseFailure(FairdecodeError):
    """A gate reply was neither YES nor NO; callers treat this as fired."""


# -- mock backend -------------------------------------------------------------

class ScriptMiss(FairdecodeError):
    """The mock script has no (remaining) response for a request."""

    def __init__(self, role: str, key: tuple[str, ...], detail: str = "no entry"):
        super().__init__(f"script miss for role={role} key={key!r}: {detail}")
        self.role = role
        self.key = key


# -- HTTP backend --------------------------------------------------------------

class BackendError(FairdecodeError):
    """Base for errors raised by a live backend."""


class NetworkError(BackendError):
    """Transport failure or retry-exhausted server error."""


class AuthError(BackendError):
    """401/403 from the endpoint; never retried."""


class RateLimited(BackendError):
    """429 responses exhausted the retry budget."""


class MalformedResponse(BackendError):
    """The endpoint returned 200 but not a usable chat completion."""


# -- datasets ------------------------------------------------------------------

class DatasetError(FairdecodeError):
    """One or more dataset lines failed validation.

    ``problems`` holds human-readable messages, each tagged with its
    1-based line number where applicable.
    """

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems
