"""Exception hierarchy.

Numerical failures (non-convergence, degenerate factorizations) derive from
:class:`NumericalError`; malformed inputs derive from :class:`ValueError` so
that ordinary argument checking keeps working.
"""


class NumericalError(RuntimeError):
    """A computation could not be completed to the requested accuracy."""


class RootFindingError(NumericalError):
    """Newton failed, a count check failed, or two zeros collapsed."""


class DegenerateError(NumericalError):
    """A linear system that should be regular turned out singular."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class SpectrumTooShortError(ValueError):
    """The spectrum does not reach the truncation radius of the summation."""


class ControlValidationError(NumericalError):
    """The simulator did not confirm that a control nulls the state."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class ConfigError(ValueError):
    """Invalid or incomplete configuration file."""
