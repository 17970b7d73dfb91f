"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands live on different numbers of qubits / modes."""


class ContractError(ValueError):
    """An input violates a documented precondition."""


class DomainError(ValueError):
    """Argument outside the supported numerical domain."""


class SingularityError(ArithmeticError):
    """Overlap matrix lost positive-definiteness."""

    def __init__(self, message, energy_keV=None, b=None, t=None):
        super().__init__(message)
        self.energy_keV = energy_keV
        self.b = b
        self.t = t


class IntegrationError(RuntimeError):
    """Adaptive integrator could not proceed (step-size underflow)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConvergenceError(RuntimeError):
    """Adaptive ansatz growth could not bring L^2 under the threshold."""

    def __init__(self, message, energy_keV=None, b=None, t=None):
        super().__init__(message)
        self.energy_keV = energy_keV
        self.b = b
        self.t = t


class QuadratureResolutionError(ValueError):
    """Too few impact-parameter samples for the cross-section quadrature."""


class ConfigError(ValueError):
    """Malformed sweep configuration."""


class EmptyComparisonError(ValueError):
    """Computed and reference cross sections share no energy range."""
