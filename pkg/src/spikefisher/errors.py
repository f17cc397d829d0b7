"""Exception hierarchy.

Every error raised by the package derives from :class:`SpikeFisherError`,
and most also subclass :class:`ValueError` so callers that only care about
bad input can catch that.
"""

from __future__ import annotations


class SpikeFisherError(Exception):
    """Base class for all package errors."""


class InvalidRotationError(SpikeFisherError, ValueError):
    pass


class InvalidSpectrumError(SpikeFisherError, ValueError):
    pass


class SubcriticalSpikeError(SpikeFisherError, ValueError):
    pass


class DimensionError(SpikeFisherError, ValueError):
    pass


class SingularS2Error(SpikeFisherError, ValueError):
    """The second sample covariance is (numerically) not positive definite."""


class PoleError(SpikeFisherError, ValueError):
    pass


class InsideSupportError(SpikeFisherError, ValueError):
    pass


class DomainError(SpikeFisherError, ValueError):
    pass


class NoSupercriticalRootError(SpikeFisherError, ValueError):
    """No centering parameter exists strictly to the right of the bulk."""


class NonpositiveVarianceError(SpikeFisherError, ValueError):
    pass


class InvalidCovarianceError(SpikeFisherError, ValueError):
    pass


class ConfigError(SpikeFisherError, ValueError):
    """Configuration failed validation; ``field`` names the offending key."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class ExperimentDegenerateError(SpikeFisherError, RuntimeError):
    """Too many replications failed for the summary to be trusted."""

    def __init__(self, message: str, failures: dict[int, str] | None = None) -> None:
        super().__init__(message)
        self.failures = dict(failures or {})
