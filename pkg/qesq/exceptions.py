__all__ = (
    "ConvergenceError",
    "DegenerateParameterError",
    "DomainError",
    "InvalidParameterError",
    "InvalidRecordError",
    "QesError",
    "SingularConfigurationError",
)


class QesError(Exception):
    pass


class InvalidParameterError(QesError, ValueError):
    pass


class DegenerateParameterError(InvalidParameterError):
    """The ansatz family requires `alpha != 0`."""


class DomainError(QesError, ValueError):
    pass


class ConvergenceError(QesError, ArithmeticError):
    pass


class SingularConfigurationError(QesError, ZeroDivisionError):
    """Coincident Niven zeros, or a zero at the origin where `1/r` is present."""


class InvalidRecordError(QesError, ValueError):
    pass
