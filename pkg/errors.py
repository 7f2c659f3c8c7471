"""Exception hierarchy shared by the solver, the harness and the CLI."""


class AlignmentError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(AlignmentError, ValueError):
    """A run configuration could not be parsed or failed validation."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if key is not None:
            prefix.append(f"key '{key}'")
        if prefix:
            message = f"{', '.join(prefix)}: {message}"
        super().__init__(message)


class PreconditionError(AlignmentError, ValueError):
    """A numerical precondition of an operation does not hold."""

    def __init__(self, message, cell=None):
        self.cell = cell
        if cell is not None:
            message = f"{message} (cell {cell})"
        super().__init__(message)


class AcceptanceError(AlignmentError):
    """A verification check did not pass."""
