"""Exception hierarchy shared across the package."""


class EmoclError(Exception):
    """Base class for all errors raised by this package."""


class DataError(EmoclError):
    """Input data violates a contract (bad label, bad shape, bad config)."""


class CorpusFormatError(DataError):
    """A corpus file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
