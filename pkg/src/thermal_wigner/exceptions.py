"""Exception types signalling numerical failure modes.

Library code raises these (all derived from :class:`ThermalWignerError`)
for failures of the numerics; plain ``ValueError``/``TypeError`` are
reserved for malformed inputs and configuration.
"""


class ThermalWignerError(Exception):
    """Base class for numerical failures in this package."""


class CausticError(ThermalWignerError):
    """An amplitude determinant vanished (caustic signalled)."""


class HyperbolicFormError(ThermalWignerError):
    """A local quadratic form is hyperbolic where ellipticity is required."""


class SingularHessianError(ThermalWignerError):
    """Hessian not invertible where an inverse is required."""

    def __init__(self, message, det=None):
        super().__init__(message)
        self.det = det


class ValidityError(ThermalWignerError):
    """Short-time form evaluated outside its validity window."""


class DivergenceError(ThermalWignerError):
    """A trajectory escaped the configured radius."""


class StiffnessError(ThermalWignerError):
    """Adaptive step size underflowed."""


class BasisSizeError(ThermalWignerError):
    """Oscillator basis too small for the requested spectrum."""

    def __init__(self, message, suggested_size=None):
        super().__init__(message)
        self.suggested_size = suggested_size


class TruncationError(ThermalWignerError):
    """Spectral sum truncation unsafe at the requested temperature."""


class ResolutionError(ThermalWignerError):
    """Grid too coarse for the requested operation."""


class QuadratureError(ThermalWignerError):
    """Phase-space quadrature failed to converge."""

    def __init__(self, message, last_values=None):
        super().__init__(message)
        self.last_values = last_values
