"""Exception hierarchy for ludometer."""


class LudometerError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LudometerError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class IngestError(LudometerError, ValueError):
    """Match data could not be read or refers to unknown players."""


class SeparationError(LudometerError):
    """The unpenalized likelihood has no finite maximizer.

    Raised when ``lam == 0`` and some player has only wins or only losses
    (perfect data separation).
    """

    def __init__(self, message, flagged=()):
        super().__init__(message)
        self.flagged = list(flagged)


class ConnectivityError(LudometerError):
    """The comparison graph is disconnected and the fit is not identified."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class FitDivergenceError(LudometerError):
    """Newton iterations produced a non-finite objective or failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SamplerError(LudometerError):
    """A numerical failure inside the Gibbs sampler."""
