"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class QuadratureError(RuntimeError):
    """Adaptive integration failed to reach the requested tolerance."""


class InsufficientSampleError(ValueError):
    """A Monte Carlo selection contains too few paths to be used."""

    def __init__(self, message: str, count: int = 0):
        super().__init__(message)
        self.count = count


class PnlDataError(ValueError):
    """Malformed or unusable PnL input."""
