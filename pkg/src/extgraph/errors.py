"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: InputError -> 2, ConvergenceError -> 3,
I/O problems (plain OSError) -> 4.
"""


class ExtgraphError(Exception):
    """Base class for all package-specific errors."""


class InputError(ExtgraphError, ValueError):
    """Invalid user input: malformed matrices, bad dimensions, bad options.

    ``reason`` is a short machine-readable tag so that callers (and tests)
    can distinguish failure modes without parsing messages.
    """

    def __init__(self, message, reason="invalid"):
        super().__init__(message)
        self.reason = reason


class ConvergenceError(ExtgraphError, RuntimeError):
    """A solver failed to converge or lost positive definiteness."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
