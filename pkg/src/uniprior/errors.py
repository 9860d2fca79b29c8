"""Exception types shared across the toolkit.

The CLI maps these onto its exit codes: ValidationError -> 1,
InfeasibleError -> 2, OSError -> 3.
"""


class UnipriorError(Exception):
    """Base class for toolkit errors."""


class ValidationError(UnipriorError):
    """Malformed or inconsistent input (file contents, problem constraints)."""


class InfeasibleError(UnipriorError):
    """Requested computation exceeds a documented size bound."""
