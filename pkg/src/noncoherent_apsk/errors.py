"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations

from typing import Any


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class CapacityError(InvalidInputError):
    """An enumeration would exceed its configured size guard."""


class EmptyPhaseError(InvalidInputError):
    """A phase analytic was requested for an allocation without phase bits."""


class InvalidStateError(RuntimeError):
    """An internal precondition of a detector step does not hold."""


class SolverFailureError(RuntimeError):
    """The convex subproblem solver did not reach its tolerance.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    best_iterate : tuple or None
        ``(amplitudes, t)`` of the best strictly feasible point found, if any.
    """

    def __init__(self, message: str, best_iterate: Any = None):
        super().__init__(message)
        self.best_iterate = best_iterate


class DesignFailureError(RuntimeError):
    """Every restart of an amplitude-set design failed.

    Parameters
    ----------
    message : str
        Human readable diagnostic.
    diagnostics : list of str
        One entry per failed restart.
    """

    def __init__(self, message: str, diagnostics: list[str] | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class SimulationError(RuntimeError):
    """A sweep stopped early; completed SNR points are kept in ``partial``."""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial


class CodebookFormatError(InvalidInputError):
    """A codebook file is missing, unreadable or inconsistent."""
