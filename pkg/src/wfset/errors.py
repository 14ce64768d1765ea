"""Exception types shared across the package."""


class WFSetError(Exception):
    """Base class for all package errors."""


class DimensionError(WFSetError, ValueError):
    """Point or covector dimension does not match the model."""


class DerivativeOrderError(WFSetError, ValueError):
    """A derivative of higher order than the model declares was requested."""


class WindowError(WFSetError, ValueError):
    """Invalid window specification or an unresolvable window table."""


class NyquistError(WFSetError):
    """The sampling grid cannot resolve the requested frequencies."""


class FlowError(WFSetError):
    """Orbit integration failed (step-size underflow or too many steps)."""

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class QuadratureError(WFSetError):
    """A quadrature did not reach its tolerance."""


class NormDriftError(WFSetError):
    """Propagation left the unitarity tolerance band or produced NaNs."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(WFSetError):
    """Malformed run configuration."""
