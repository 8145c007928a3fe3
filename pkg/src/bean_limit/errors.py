"""Shared exception types."""


class DomainError(ValueError):
    """Input violates a documented admissibility precondition."""


class PreconditionFailed(ValueError):
    """Numerically verified hypothesis check failed on the supplied data."""
