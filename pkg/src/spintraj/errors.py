"""Exception hierarchy shared across the package."""


class SpintrajError(Exception):
    """Base class for all package errors."""


class DomainError(SpintrajError, ValueError):
    """Invalid physical or structural input (bad index, rank out of range, etc.)."""


class FormatError(SpintrajError, ValueError):
    """Malformed or inconsistent file content."""


class NumericError(SpintrajError, ArithmeticError):
    """Non-finite values or failed numerical procedure."""
