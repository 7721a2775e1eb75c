"""Exception types raised across the package."""

from __future__ import annotations


class SepCltError(Exception):
    """Base class for all package errors."""


class NonFiniteKernel(SepCltError):
    """An integrand evaluated to NaN or infinity at an atom of a measure."""


class EmptyList(SepCltError, ValueError):
    pass


class NoConvergence(SepCltError):
    def __init__(self, residual: float, iterations: int, z: complex | None = None):
        self.residual = residual
        self.iterations = iterations
        self.z = z
        super().__init__(
            f"fixed-point iteration did not converge at z={z}: "
            f"residual={residual:.3e} after {iterations} iterations"
        )


class LeftSolutionSet(SepCltError):
    """The iterate left the admissible half-plane set and damping could not recover it."""


class PathSolveError(SepCltError):
    """A continuation solve failed; carries the index of the failing point."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"solve failed at point {index}: {cause}")


class ContourTooTight(SepCltError):
    pass


class BranchCutCrossing(SepCltError):
    pass


class DegenerateDenominator(SepCltError):
    pass


class CoincidentPoints(SepCltError):
    pass


class BranchViolation(SepCltError):
    """|f(z1, z2)| >= 1 somewhere on the contour product."""


class OverlappingContours(SepCltError):
    pass


class NonConvergedQuadrature(SepCltError):
    pass


class ImaginaryResidue(SepCltError):
    """A quantity that must be real came back with a non-negligible imaginary part."""


class EigenFailure(SepCltError):
    pass


class DomainViolation(SepCltError, ValueError):
    pass


class ReplicationFailure(SepCltError):
    pass
