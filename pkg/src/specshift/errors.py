"""Exception taxonomy shared by all specshift modules.

Every failure mode that callers are expected to branch on gets its own
class; generic ValueError/RuntimeError are reserved for programming errors.
"""


class SpecshiftError(Exception):
    """Base class for all library errors."""


class DomainError(SpecshiftError):
    """Argument outside the mathematical domain (e.g. z on the positive real axis)."""


class QuadratureError(SpecshiftError):
    """Adaptive quadrature could not meet the requested tolerance."""


class TailError(SpecshiftError):
    """Truncation-tail model failed its Richardson consistency check."""


class UnknownTail(SpecshiftError):
    """A tabulated measure piece has unbounded support but no declared tail behaviour."""


class MeasureUnavailable(SpecshiftError):
    """Operation needs a representing measure but the function is evaluation-only."""


class SingularMatrix(SpecshiftError):
    """Pivot below the singularity threshold during LU elimination."""


class ConvergenceError(SpecshiftError):
    """Iterative kernel (power iteration) did not converge."""


class UnsupportedNorm(SpecshiftError):
    """Requested quantity is only defined for a different vector norm."""


class SpectrumHit(SpecshiftError):
    """Resolvent requested at (numerically) a spectral point."""


class Unbounded(SpecshiftError):
    """Supremum diverges: the operator fails the requested classification."""


class NoSector(SpecshiftError):
    """Sector validation failed after the maximum number of shrink steps."""


class NotCommuting(SpecshiftError):
    """Hypothesis 'A-B commutes with the resolvents of B' fails at a sampled point."""


class HypothesisViolated(SpecshiftError):
    """A trace-formula hypothesis fails; the computation is refused, not attempted."""


class NonConvergent(SpecshiftError):
    """A reported sequence fails its required monotone-approach contract."""


class LambdaTooSmall(SpecshiftError):
    """Evaluation point below the validated threshold for the product formula."""


class BranchViolation(SpecshiftError):
    """A determinant factor left the right half-plane; principal log undefined."""


class DegenerateFactor(SpecshiftError):
    """Rank-one update denominator vanishes."""


class GenerationFailed(SpecshiftError):
    """Oracle instance generation exhausted its retry budget."""
