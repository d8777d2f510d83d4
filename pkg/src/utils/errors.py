"""Exception hierarchy; every class knows the CLI exit code it maps to."""


class LabError(Exception):
    exit_code = 1


class ConfigError(LabError, ValueError):
    """Invalid configuration: counts, orders, ranges of run parameters."""
    exit_code = 2


class ValidationError(LabError, ValueError):
    exit_code = 2


class ParseError(ValidationError):
    """Schema violation in a JSON document; `path` locates the offending node."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class DomainError(LabError, ValueError):
    """Argument outside the mathematical domain of an operation."""
    exit_code = 2


class InvalidPointError(DomainError):
    pass


class ShapeError(LabError, ValueError):
    exit_code = 2


class NumericalDomainError(LabError, ArithmeticError):
    """Non-finite value met during a reduction."""
    exit_code = 3


class ConvergenceError(LabError, ArithmeticError):
    exit_code = 3


class OutputError(LabError, OSError):
    exit_code = 4
