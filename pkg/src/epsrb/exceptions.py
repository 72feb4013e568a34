"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`EpsRBError`,
so callers (and the command line front end) can map failures to exit codes by
class.
"""


class EpsRBError(Exception):
    """Base class for all package errors."""


# spaces and operators
class NonSymmetric(EpsRBError, ValueError):
    pass


class NotPositiveDefinite(EpsRBError, ValueError):
    pass


class SingularGram(NotPositiveDefinite):
    """Gram matrix factorizes but is numerically singular."""


class DimensionMismatch(EpsRBError, ValueError):
    pass


# solvers
class SolverError(EpsRBError, RuntimeError):
    """A numerical solve did not produce a usable answer."""


class BracketFailure(SolverError):
    pass


class LinearSolveFailure(SolverError):
    pass


class MaxIterations(SolverError):
    pass


class ZeroVector(EpsRBError, ValueError):
    pass


class DependentBasis(EpsRBError, ValueError):
    pass


# parametric families
class AssumptionViolation(EpsRBError):
    """A numerical audit of the family assumptions failed.

    ``check`` names the failing assumption, e.g. ``"A3"``.
    """

    def __init__(self, check, message):
        super().__init__(f"{check} violated: {message}")
        self.check = check


class InfeasibleFamily(AssumptionViolation):
    def __init__(self, message):
        super().__init__("A3", message)


class CoercivityViolation(AssumptionViolation):
    def __init__(self, message):
        super().__init__("H1", message)


class ParameterOutOfDomain(EpsRBError, ValueError):
    pass


class ContainmentFailure(EpsRBError):
    """An optimal eta fell outside the estimated eta interval."""


# reduced basis
class EmptyGrid(EpsRBError, ValueError):
    pass


class EmptyBasis(EpsRBError, ValueError):
    pass


class StagnationWithoutConvergence(SolverError):
    """Greedy loop cannot enlarge the basis while the surrogate exceeds delta.

    The partially trained basis is attached as ``basis``.
    """

    def __init__(self, message, basis=None):
        super().__init__(message)
        self.basis = basis


class ArchiveMismatch(EpsRBError):
    """A stored basis does not belong to the family it is loaded against."""


class ConfigError(EpsRBError, ValueError):
    pass
