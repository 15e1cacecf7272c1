"""Exception types shared across the simulation modules."""


class ServoError(Exception):
    """Base class for all errors raised by hddservo."""


class NonFiniteError(ServoError, ArithmeticError):
    """A signal or state became NaN/inf (numerical blow-up)."""


class PoleAtZero(ServoError, ZeroDivisionError):
    """Static gain requested for a model with an integrator."""


class InsufficientData(ServoError):
    pass


class MetricError(ServoError, ValueError):
    pass


class DegenerateReference(MetricError):
    pass


class ZeroReference(MetricError):
    pass


class NeverSettles(MetricError):
    pass


class NoCrossing(MetricError):
    pass


class ConfigError(ServoError, ValueError):
    """Invalid or incomplete scenario configuration."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnstableDiscretization(UserWarning):
    """Stable continuous model mapped to a discrete model with |pole| >= 1."""
