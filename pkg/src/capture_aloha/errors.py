"""Exception hierarchy shared by the analysis, optimization and simulation code."""


class CaptureAlohaError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CaptureAlohaError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class PreconditionError(DomainError):
    """A structural requirement of a solver is not met (e.g. a non-monotone backoff schedule)."""


class ConvergenceError(CaptureAlohaError, ArithmeticError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class InvariantError(CaptureAlohaError, RuntimeError):
    """An internal consistency check failed; indicates a bug or an unsupported corner case."""
