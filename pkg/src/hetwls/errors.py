"""Exception types shared across the package."""


class UsageError(ValueError):
    """Raised when an argument violates an operation's precondition."""
