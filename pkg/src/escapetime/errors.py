"""Exception types shared across the toolkit.

DomainError maps to CLI exit code 2, SolverError to exit code 3.
"""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class SolverError(RuntimeError):
    """A linear solve or iteration failed to produce a usable result."""
