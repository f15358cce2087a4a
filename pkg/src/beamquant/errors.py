"""Exception hierarchy for the beamquant solver."""


class BeamquantError(Exception):
    """Base class for all beamquant errors."""


class DimensionMismatch(BeamquantError, ValueError):
    """Operands have incompatible shapes."""


class SchemaError(BeamquantError, ValueError):
    """A serialized document violates the expected schema.

    Carries the offending field path in ``field``.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalFailure(BeamquantError):
    """A numerical precondition failed during the solve."""


class NotPositiveDefinite(NumericalFailure):
    """Cholesky factorization hit a nonpositive pivot."""


class SingularTrailingBlock(NumericalFailure):
    """Trailing block of Q (or its Schur complement) is singular; the
    compression rate is undefined (Q sits on the PSD boundary)."""


class NonPositivePivot(NumericalFailure):
    """The multiplier-recovery recursion produced a nonpositive residual
    pivot; the positivity assumption of the recursion fails."""


class DegenerateMultiplier(NumericalFailure):
    """A fronthaul multiplier has zero leading entry, leaving the
    corresponding row of Q underdetermined."""


class NonHermitianResidual(NumericalFailure):
    """A quantity that must be real came out with a large imaginary part."""


class OrthogonalBeam(NumericalFailure):
    """A beam direction is numerically orthogonal to its own channel."""


class MaxIterationsError(NumericalFailure):
    """A fixed-point iteration hit its iteration cap without converging
    and without evidence of divergence."""


class InfeasibleError(BeamquantError):
    """The problem instance is infeasible (dual iterates diverge)."""


class InfeasibleOnGrid(InfeasibleError):
    """The brute-force oracle found no feasible point on its grid."""
