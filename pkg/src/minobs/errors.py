"""Exception hierarchy shared by every module."""


class MinobsError(Exception):
    """Base class for all package errors."""


class DomainError(MinobsError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigurationError(MinobsError, ValueError):
    """A fixture or experiment configuration is malformed."""


class FixtureError(ConfigurationError):
    """A fixture is well-formed but violates a model invariant."""


class OrthogonalityError(DomainError):
    """A state sits above threshold in two or more non-NULL components."""


class InvariantViolation(MinobsError, RuntimeError):
    """A runtime invariant was broken, e.g. a reaction left the measured image."""
