"""Exception types shared across the package."""


class ChartersegError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(ChartersegError):
    """A required column or field is missing or unknown."""


class ParseError(ChartersegError):
    """A value could not be parsed; carries its location when known."""

    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column


class DuplicateRowError(ChartersegError):
    """Two panel rows share the same (bank_id, year) key."""


class EmptySubsampleError(ChartersegError):
    """A filter or matrix build produced no rows."""


class EmptyModelError(ChartersegError):
    """Too few rows to fit the requested model."""


class ConfigError(ChartersegError):
    """A run configuration value is missing, malformed, or inconsistent."""


class DegenerateInputError(ChartersegError, ValueError):
    """Numeric input outside a function's domain (empty, constant, zero variance)."""
