"""Exception types raised by the package."""


class ScatteringError(Exception):
    """Base class for all numerical failures raised here."""


class DomainError(ScatteringError, ValueError):
    """An argument lies outside the domain of the requested function."""


class ParameterError(ScatteringError, ValueError):
    """A potential-class parameter violates its constructor precondition."""


class NoSolutionError(ScatteringError):
    """The Master equation has no admissible root for the given inputs.

    ``details`` carries whatever diagnostic values the caller computed,
    e.g. the scanned residual endpoints.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class NegativeStageError(NoSolutionError):
    """The Master equation is solved only by a negative singularity stage."""


class QuadratureError(ScatteringError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class MatchingError(ScatteringError):
    """The smooth-matching linear system at t=1 is singular."""


class NotAsymptoticError(ScatteringError):
    """The phase-extraction radius is not outside the potential range."""


class OracleError(ScatteringError):
    """Direct integration of the radial equation failed."""

    def __init__(self, message, r=None):
        super().__init__(message)
        self.r = r


class PreAsymptoticError(ScatteringError):
    """An asymptotic formula was evaluated outside its large-R domain."""
