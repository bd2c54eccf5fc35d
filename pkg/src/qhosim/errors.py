"""Exception types shared across the package.

Two failure families matter to callers (and to the CLI exit codes): bad
arguments, and numerical trouble such as an eigensolver that refuses to
converge.
"""


class UsageError(ValueError):
    """Invalid arguments or preconditions supplied by the caller."""


class NumericalFailure(RuntimeError):
    """A numerical routine could not deliver a result within tolerance."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DegreeOverflow(UsageError):
    """A polynomial operation would exceed the configured degree cap."""
