"""Exception hierarchy shared by all teig modules."""


class TeigError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(TeigError):
    """Malformed input file or dictionary (profile / spectral-data JSON)."""


class NonPositiveProfile(TeigError):
    """A wave-speed profile dips to zero or below on the audit grid."""


class OutOfDomain(TeigError):
    """Evaluation point lies outside the profile domain [0, b]."""


class ToleranceNotMet(TeigError):
    """The adaptive step controller underflowed before reaching the endpoint."""


class ZeroOnContour(TeigError):
    """A zero sits on (or too close to) the counting contour after all retries."""


class QuadratureNotConverged(TeigError):
    """Contour quadrature failed to settle on an integer winding number."""


class IdenticallyZero(TeigError):
    """The dispersion function vanishes identically (uniform unit wave speed
    or zero potential); zero counting is meaningless."""


class MaxDepthExceeded(TeigError):
    """Box subdivision exceeded the recursion budget without resolving."""


class BracketingFailed(TeigError):
    """Real-axis scan could not bracket the requested number of zeros."""


class InsufficientZeros(TeigError):
    """Spectral data holds fewer zero groups than the requested truncation."""


class GammaMissing(TeigError):
    """The operation requires the normalization constant gamma."""


class WrongOriginOrder(TeigError):
    """Sum-rule check requires a simple zero at the origin (d = 1)."""


class DegenerateExpansion(TeigError):
    """Both low-order expansion coefficients vanish (origin order >= 3, or the
    dispersion function is identically zero); gamma cannot be inferred."""

    def __init__(self, message, coefficients=None):
        super().__init__(message)
        self.coefficients = coefficients


class InsufficientRealZeros(TeigError):
    """Too few real positive zeros to infer the travel time."""


class PathologicalLattice(TeigError):
    """Inferred travel time is non-positive; the zero lattice is inconsistent
    with a positive wave speed."""


class RegimeAEqualsB(TeigError):
    """The asymptotic lattice degenerates when travel time equals the radius."""


class RegimeMismatch(TeigError):
    """Declared inversion regime is unsupported or contradicts the data."""


class InterpolationIllConditioned(TeigError):
    """Cardinal-series interpolation failed its held-out consistency check."""
