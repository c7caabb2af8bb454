"""Exception hierarchy shared by every adabatt module.

The CLI maps :class:`ConfigError` (and its subclasses) to exit code 2 and any
other :class:`AdabattError` to exit code 3.
"""

from typing import Optional


class AdabattError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(AdabattError, ValueError):
    """Invalid configuration value; ``key`` names the offending entry."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        if key:
            message = f"{key}: {message}"
        super().__init__(message)


class InvalidSpecError(ConfigError):
    """A GeneratorSpec violates its invariants."""


class PlanError(ConfigError):
    """An AdaptivePlan violates its invariants."""


class SequenceTooShortError(AdabattError, ValueError):
    def __init__(self, test_id: str, required: int, actual: int):
        self.test_id = test_id
        self.required = required
        self.actual = actual
        super().__init__(
            f"test '{test_id}' needs at least {required} bits, got {actual}"
        )


class OracleLimitError(AdabattError, ValueError):
    """Exhaustive enumeration requested beyond the supported word length."""


class InfiniteSampleSizeError(AdabattError, ArithmeticError):
    """h(nu) = 1: no finite sample separates the source from uniform."""


class WindowOverlapError(AdabattError):
    """The final-stage window shares bits with a preliminary window."""


class SeekError(AdabattError):
    """Backward seek on a source that cannot rewind."""


class StreamExhaustedError(AdabattError):
    """A finite source (file) ran out of data."""


class BudgetExceededError(AdabattError):
    """Predicted plan time is above the configured budget."""
