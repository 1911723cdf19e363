"""Exceptions shared by the estimation packages."""


class EstimationError(Exception):
    """Base exception for numerical estimation failures."""

    pass


class UnderflowError(EstimationError):
    """A density value underflowed where a positive value is required."""

    pass


class UnsupportedPilotError(EstimationError):
    """The requested operation needs a capability this density does not have."""

    pass


class WdbcFormatError(EstimationError, ValueError):
    """Malformed or inconsistent WDBC input file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
