"""Exception types raised by the constrained-motion engine."""


class DiracflowError(Exception):
    """Base class for all library errors."""


class DomainError(DiracflowError):
    """Input lies outside the mathematical domain of an operation."""


class PhaseUndefined(DiracflowError):
    """The action-angle chart breaks down (reference amplitude vanishes)."""


class DimensionError(DiracflowError):
    """State or spectrum dimension does not match the requested model."""


class DegenerateSpectrum(DiracflowError):
    """Energy levels collide; the chart assumes a non-degenerate spectrum."""


class SingularOmega(DiracflowError):
    """The constraint commutator matrix is numerically singular."""


class GradientMismatch(DiracflowError):
    """An analytic constraint gradient disagrees with finite differences."""


class ChartSingularity(DiracflowError):
    """A coordinate singularity was reached (for example p1*p4 -> 0)."""


class PoleSingularity(DiracflowError):
    """A Bloch-sphere pole where the azimuthal rate is undefined."""


class ProjectionFailed(DiracflowError):
    """Newton projection onto the constraint surface did not converge."""


class DriftExceeded(DiracflowError):
    """Constraint residuals grew past the configured tolerance budget."""
