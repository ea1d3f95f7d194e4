"""Exception hierarchy for potcore.

Every error carries the process exit code the command line maps it to:
2 for usage and precondition problems, 3 for statistical failures.
"""

from __future__ import annotations

from typing import Any


class PotError(Exception):
    """Base class for all potcore errors."""

    exit_code = 1


class ArgumentError(PotError, ValueError):
    """An argument violates an operation's precondition."""

    exit_code = 2


class ParseError(PotError):
    """An input dataset could not be read or parsed."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        *,
        path: str | None = None,
        line: int | None = None,
        token: str | None = None,
    ):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line
        self.token = token


class EmptyTailError(ArgumentError):
    """No observation strictly exceeds the requested threshold."""


class InfiniteMeanError(ArgumentError):
    """The GPD mean does not exist (shape >= 1)."""


class EstimationError(PotError):
    """A fit cannot be computed from the given sample."""

    exit_code = 3


class ConvergenceError(EstimationError):
    """The likelihood optimizer found no feasible improvement over its start."""

    def __init__(self, message: str, best: Any = None, log_likelihood: float | None = None):
        super().__init__(message)
        self.best = best
        self.log_likelihood = log_likelihood


class NoStableThresholdError(EstimationError):
    """No threshold candidate satisfies the shape-stability rule."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class UnstableNullError(EstimationError):
    """Too many null replicates failed to refit during a p-value computation."""

    def __init__(self, message: str, failed: int = 0, requested: int = 0):
        super().__init__(message)
        self.failed = failed
        self.requested = requested


class UnstableBootstrapError(EstimationError):
    """Too many bootstrap replicates exhausted their redraw attempts."""

    def __init__(self, message: str, failed: int = 0, requested: int = 0):
        super().__init__(message)
        self.failed = failed
        self.requested = requested
