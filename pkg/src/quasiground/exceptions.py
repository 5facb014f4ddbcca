"""Exception hierarchy shared by the numerical modules and the CLI."""


class QuasigroundError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(QuasigroundError, ValueError):
    """An argument lies outside the domain of a function (e.g. non-finite)."""


class QuadratureError(QuasigroundError, ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class InvariantViolation(QuasigroundError, RuntimeError):
    """An internal invariant that should hold for valid input failed."""


class BracketNotFound(QuasigroundError, RuntimeError):
    """The fibering derivative kept its sign over the whole scan range."""


class NotOnManifold(QuasigroundError, ValueError):
    """A certificate was requested for a field that is not a Nehari point."""


class PSBoundViolation(QuasigroundError, RuntimeError):
    """A solver trajectory left the a-priori norm cap for Palais-Smale sequences."""

    def __init__(self, message, norm=None, cap=None, iteration=None):
        super().__init__(message)
        self.norm = norm
        self.cap = cap
        self.iteration = iteration


class ResolutionError(QuasigroundError, ValueError):
    """An instanton scale is below what the grid can resolve."""


class ConfigError(QuasigroundError, ValueError):
    """Malformed or inconsistent run configuration."""


class AssumptionFailure(QuasigroundError, ValueError):
    """A model fails a structural hypothesis that the solver relies on."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
