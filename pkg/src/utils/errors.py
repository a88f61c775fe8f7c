"""
Error hierarchy for mothersolve.

Every error is a ValueError so callers can keep the ``except ValueError`` style.
"""


class MotherSolveError(ValueError):
    """Base class for all domain errors."""


class DomainError(MotherSolveError):
    """Invalid parameters or an argument outside the operation's domain."""


class BranchError(MotherSolveError):
    """Evaluation on a branch cut."""


class PoleError(MotherSolveError):
    """Evaluation at a pole."""


class PhaseError(MotherSolveError):
    """Computation requested outside the pre-critical phase."""


class SolverError(MotherSolveError):
    """Nonlinear solve failed (possibly post-critical parameters)."""


class MultiplicityError(SolverError):
    """More than one admissible solution where one was expected."""


class ConsistencyError(MotherSolveError):
    """Recovered quantities violate their defining constraints."""


class TopologyError(MotherSolveError):
    """A traced trajectory or contour has the wrong global structure."""


class QuadratureError(MotherSolveError):
    """A quadrature did not reach its tolerance."""


class HankelSingularError(MotherSolveError):
    """Hankel moment matrix is singular at the working precision."""


class PrecisionError(MotherSolveError):
    """Results moved when recomputed at higher precision."""


class RootError(MotherSolveError):
    """Polynomial root polishing did not converge."""


class DegeneracyError(MotherSolveError):
    """A quantity used as a divisor vanished."""


class MarginError(MotherSolveError):
    """Point too close to Γ0 for an asymptotic formula."""


class DependencyError(MotherSolveError):
    """A required upstream result is missing."""
