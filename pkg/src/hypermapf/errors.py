"""Shared exception types."""


class ResourceLimitError(RuntimeError):
    """A search or enumeration exceeded its configured budget."""


class ParseError(ValueError):
    """A text format could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss."""
