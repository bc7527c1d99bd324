"""Exception hierarchy.

Every solver failure derives from :class:`FKWaveError`, so callers (and the
CLI) can report the failing condition by class name.
"""


class FKWaveError(Exception):
    """Base class for all solver and verification failures."""


class InvalidParams(FKWaveError, ValueError):
    """Parameters or configuration violate their documented constraints."""


class CertificationFailed(FKWaveError):
    """Dispersion root scan found roots other than +-k0."""


class DegenerateConstant(FKWaveError):
    """An inversion constant divides by a vanishing dispersion value."""


class TailTooLarge(FKWaveError):
    """Grid part does not decay below tail_tol near the domain edge."""


class DomainTooSmall(TailTooLarge):
    """Truncated domain is too short for the requested construction."""


class NonDecayingInput(FKWaveError):
    """Operation needs a purely gridded (decaying) field."""


class NonPositiveEpsilon(FKWaveError, ValueError):
    """Mollification half-width must be positive."""


class MomentViolated(FKWaveError):
    """Kernel-mode moment of a right-hand side is not (numerically) zero."""


class NearSingularMode(FKWaveError):
    """A non-deflated Fourier mode has |D(k)| too close to zero."""


class NonContraction(FKWaveError):
    """The inner beta iteration is not contracting."""


class IterationCapExceeded(FKWaveError):
    """An iteration hit its cap before meeting its tolerance."""


class BallEscaped(FKWaveError):
    """A Picard iterate left the ball ||r||_H2 < rho."""


class SignConditionFailed(FKWaveError):
    """Assembled wave changes sign away from the prescribed zeros."""


class ResidualTooLarge(FKWaveError):
    """Converged object does not satisfy the equation to residual_tol."""


class BetaClampActive(FKWaveError):
    """The beta saturation function is not the identity at convergence."""


class BlowUp(FKWaveError):
    """Lattice integration produced displacements beyond the blow-up cap."""
