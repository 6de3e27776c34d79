"""Exception hierarchy shared across the package."""


class AuthSimError(Exception):
    """Base class for all package errors."""


class ConfigError(AuthSimError, ValueError):
    pass


class NumericalError(AuthSimError, ArithmeticError):
    """Base class for numerical failures (mapped to CLI exit code 3)."""


class DomainError(NumericalError, ValueError):
    pass


class NonDiagonalizable(NumericalError):
    pass


class Unstable(NumericalError):
    pass


class SingularInnovation(NumericalError):
    pass


class DegenerateSpectrum(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class NonResponsive(NumericalError):
    """False-negative rate does not react to the threshold it is paired with."""


class TimeReversal(AuthSimError, ValueError):
    pass


class DimensionMismatch(AuthSimError, ValueError):
    pass


class UnknownSensor(AuthSimError, IndexError):
    pass


class EmptyInput(AuthSimError, ValueError):
    pass
