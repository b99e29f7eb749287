"""Exception taxonomy shared across the package.

Everything raised on purpose derives from DynbenchError so callers can
catch one base class at the CLI boundary.  Provider-side failures get
their own intermediate base because retry policy treats them separately.
"""

from __future__ import annotations


class DynbenchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArg(DynbenchError, ValueError):
    """A caller passed an argument outside the documented domain."""


class MalformedRecord(DynbenchError):
    """A serialized record failed validation.

    Carries the 1-based line number (0 when unknown) and a human reason.
    """

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class DuplicateId(DynbenchError):
    """Two records in one dataset share an id."""


class EmptyDataset(DynbenchError):
    """A dataset-level operation received zero records."""


class EmptySample(DynbenchError):
    """A per-sample aggregate received an empty token sequence."""


class IoFailure(DynbenchError):
    """Filesystem read/write failed (wraps the OS error message)."""


class IdMismatch(DynbenchError):
    """Two result sets that must cover the same ids do not."""


class MissingInput(DynbenchError):
    """A pipeline stage's input artifact is absent."""


class ConfigError(DynbenchError):
    """Configuration file missing, unreadable, or semantically invalid."""


class ProviderError(DynbenchError):
    """Base class for chat-backend failures."""


class AuthFailure(ProviderError):
    """Backend rejected the credentials."""


class RateLimited(ProviderError):
    """Backend kept returning 429 after all retries."""


class TransportError(ProviderError):
    """Network or 5xx failure that survived the retry budget."""


class UnsupportedCapability(ProviderError):
    """Request asked for search or logprobs the backend cannot serve."""


class CassetteMiss(ProviderError):
    """Replay had no recorded exchange for a request fingerprint."""

    def __init__(self, fingerprint: str):
        self.fingerprint = fingerprint
        super().__init__(f"no recorded exchange for fingerprint {fingerprint}")


class MalformedCassette(ProviderError):
    """A cassette file could not be parsed or failed integrity checks."""


class FingerprintCollision(ProviderError):
    """One fingerprint maps to two different responses."""


class UnparseableResponse(DynbenchError):
    """Model output could not be coerced into the expected shape."""


class InvariantViolation(DynbenchError):
    """Structured model output parsed but violated a domain invariant."""


class MissingLayer(InvariantViolation):
    """A cognitive-level question set is missing one required layer."""

    def __init__(self, layer: str):
        self.layer = layer
        super().__init__(f"missing layer: {layer}")


class DuplicateLayer(InvariantViolation):
    """A cognitive-level question set repeats a layer."""

    def __init__(self, layer: str):
        self.layer = layer
        super().__init__(f"duplicate layer: {layer}")


class NoChange(DynbenchError):
    """A restructure call returned the input question verbatim."""


class NotConverged(DynbenchError):
    """Difficulty control hit its iteration cap while still off target.

    The partially adjusted dataset and the controller state are attached
    so callers can persist them; hitting the cap loses no work.
    """

    def __init__(self, state, dataset=None, log=None):
        self.state = state
        self.dataset = dataset
        self.log = log if log is not None else []
        super().__init__(
            f"not aligned after {state.iteration} adjustment rounds "
            f"(delta={state.delta:+.4f}, epsilon={state.epsilon})"
        )


class SampleCollisionWarning(UserWarning):
    """Evenly spaced sampling produced duplicate indices (tiny datasets)."""
