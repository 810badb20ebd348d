"""Exception types shared across the package."""


class ToroFluxError(Exception):
    """Base class for all package errors."""


class DomainError(ToroFluxError):
    """Point outside the domain of definition (e.g. on the vertical axis r=0)."""


class InversionError(ToroFluxError):
    """Curvilinear-to-Cartesian inversion failed (no torus or Newton stalled)."""


class DegenerateCoordinatesError(ToroFluxError):
    """Jacobian of the curvilinear frame fell below the trust threshold."""


class EllipticityError(ToroFluxError):
    """Coefficient matrix lost strict ellipticity at one or more grid nodes."""


class CompatibilityError(ToroFluxError):
    """Source term has a nonzero mean; the periodic problem is unsolvable."""


class SolverError(ToroFluxError):
    """Iterative solve did not reach the requested residual."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history) if residual_history else []


class StackRangeError(ToroFluxError):
    """Requested surface label outside the solved stack of levels."""


class ConfigError(ToroFluxError):
    """Invalid or inconsistent run configuration."""
