"""Exception types shared across the toolkit."""


class CuspkitError(Exception):
    """Base class for all toolkit errors."""


class DomainError(CuspkitError):
    """Evaluation or integration left the model's declared state box.

    Carries the offending state in ``state`` (and, for integration,
    the partial trajectory in ``trajectory``).
    """

    def __init__(self, message, state=None, trajectory=None):
        super().__init__(message)
        self.state = state
        self.trajectory = trajectory


class DerivativeConsistencyError(CuspkitError):
    """Independent derivative methods disagree beyond tolerance."""

    def __init__(self, message, entry=None, values=None):
        super().__init__(message)
        self.entry = entry
        self.values = values


class SolvabilityError(CuspkitError):
    """A required partial derivative vanished (implicit solve impossible)."""


class RootFindError(CuspkitError):
    """A root solve did not converge. ``residual`` holds the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class HopfNotFoundError(RootFindError):
    """No trace sign change of the antisymmetric block in the bracket."""


class WrongBranchError(RootFindError):
    """Trace root found but det(J_a) <= 0: a steady-state bifurcation of the
    antisymmetric block, not a Hopf point."""


class IntegrationError(CuspkitError):
    """Time stepping failed (step underflow / blow-up).

    ``trajectory`` holds the partial trajectory up to the failure.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class AnalysisError(CuspkitError):
    """A time-series analysis could not be performed (e.g. too few samples)."""


class FitError(CuspkitError):
    """A regression/fit had insufficient or degenerate data."""


class InconsistencyError(CuspkitError):
    """Computed quantities violate a relation the theory guarantees."""


class ConfigError(CuspkitError):
    """Invalid run configuration (CLI exit code 4)."""
