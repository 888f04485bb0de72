"""Exception hierarchy. CLI exit codes hang off these classes."""


class RPCAError(Exception):
    exit_code = 1


class ConfigurationError(RPCAError, ValueError):
    exit_code = 2


class DimensionError(ConfigurationError):
    pass


class DivisionDomainError(RPCAError, ZeroDivisionError):
    exit_code = 3


class NumericalFailure(RPCAError, ArithmeticError):
    exit_code = 3


class DivergenceError(NumericalFailure):
    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class DegenerateReferenceError(RPCAError, ValueError):
    """Reference signal is identically zero, so a ratio is undefined."""

    exit_code = 3


class InfeasibleGridError(RPCAError):
    exit_code = 4

    def __init__(self, message, binding=None):
        super().__init__(message)
        self.binding = binding
