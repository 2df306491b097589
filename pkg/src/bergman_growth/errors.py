"""Exception hierarchy shared by every module."""


class BergmanError(Exception):
    """Base class for all package errors."""


class DomainError(BergmanError, ValueError):
    """Argument outside the domain of the operation."""


class RangeError(BergmanError, ValueError):
    """Value outside the representable range of an inverse."""


class PoleError(BergmanError, ZeroDivisionError):
    """Evaluation at a pole of a rational map."""


class NumericError(BergmanError, ArithmeticError):
    """A numerical procedure could not certify its result (e.g. non-monotone residual)."""


class UnconvergedError(NumericError):
    """Adaptive refinement hit a cap before reaching the requested tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InvariantViolation(BergmanError, AssertionError):
    """A runtime audit found an inconsistency between derived quantities."""


class ConfigError(BergmanError, ValueError):
    """Malformed or inconsistent configuration."""
