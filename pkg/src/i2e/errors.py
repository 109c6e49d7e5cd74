"""Exception types shared across the package.

Data-quality findings that callers are expected to inspect (transcript
violations, evidence validation states) are returned as values, not raised;
the exceptions here mark contract breaches and unrecoverable failures.
"""

from __future__ import annotations


class I2eError(Exception):
    """Base class for all package errors."""


class ParseError(I2eError):
    """Malformed serialized input.

    Carries the byte offset where decoding failed (when known) and the
    field path of the offending value.
    """

    def __init__(self, message: str, *, offset: int | None = None, path: str = "$"):
        super().__init__(message)
        self.offset = offset
        self.path = path

    def __str__(self) -> str:
        loc = f" at {self.path}"
        if self.offset is not None:
            loc += f" (byte {self.offset})"
        return super().__str__() + loc


class InvariantViolation(I2eError):
    """A value breaks a structural invariant of its type."""


# --- backend gateways ---------------------------------------------------

class BackendUnavailable(I2eError):
    """External backend unreachable after the configured retries."""

    def __init__(self, message: str, *, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class AuthFailure(I2eError):
    """Backend rejected the supplied credential."""


class MalformedBackendResponse(I2eError):
    """Backend replied with something that cannot be mapped to our types."""


class AudioUnreadable(I2eError):
    """Audio object missing or not resolvable."""


class InvalidFixture(I2eError):
    """Mock fixture file violates the fixture schema."""


class ContextLengthExceeded(I2eError):
    """Request token estimate above the backend context limit."""


# --- refinement ---------------------------------------------------------

class EmptyTranscript(I2eError):
    """Transcript with no segments where at least one is required."""


class CoverageGap(I2eError):
    """A segment is covered by no window correction."""


class DuplicateCorrection(I2eError):
    """A segment is covered by more than one window correction."""


# --- scoring & metrics --------------------------------------------------

class MissingJudgment(I2eError):
    """An indicator in scope has no judgment."""

    def __init__(self, indicator_id: str):
        super().__init__(f"no judgment for indicator {indicator_id!r}")
        self.indicator_id = indicator_id


class KeyMismatch(I2eError):
    """Compared key sets differ; lists the symmetric difference."""

    def __init__(self, only_left: list[str], only_right: list[str]):
        self.only_left = sorted(only_left)
        self.only_right = sorted(only_right)
        super().__init__(
            f"key mismatch: {len(self.only_left)} only in model, "
            f"{len(self.only_right)} only in annotation"
        )


class LengthMismatch(I2eError):
    pass


class EmptyInput(I2eError):
    pass


class EmptyReference(I2eError):
    """CER reference empty after normalization."""


class SessionMismatch(I2eError):
    """Transcripts being compared belong to different sessions."""


class ZeroAutomatedTime(I2eError):
    """Efficiency model needs a positive automated workflow total."""


class SessionEvalFailed(I2eError):
    """Every indicator evaluation in a session hard-failed."""
