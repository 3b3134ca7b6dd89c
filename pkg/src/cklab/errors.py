"""Shared exception types for validation failures and resource caps."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class CapExceededError(RuntimeError):
    """Raised when a computation would exceed a configured resource cap."""
