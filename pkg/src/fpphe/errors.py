"""Exception hierarchy shared by all fpphe modules.

Exit-code mapping used by the CLI:
  InvalidParameterError -> 1
  InfeasibleError, UnstableEstimateError -> 2
  ResourceCapError -> 3
"""


class FpphError(Exception):
    """Base class for all fpphe errors."""


class InvalidParameterError(FpphError):
    """An argument violates a documented precondition."""


class InfeasibleError(FpphError):
    """A parameter system has no solution (e.g. nonpositive denominator)."""


class UnstableEstimateError(FpphError):
    """A Monte Carlo estimate cannot be stabilized at the requested scale."""


class ResourceCapError(FpphError):
    """A construction or simulation would exceed the configured size cap."""


class UnreachableTargetError(FpphError):
    """The simulation exhausted all events without infecting the target."""
