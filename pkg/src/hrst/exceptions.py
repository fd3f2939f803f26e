"""Exception types raised by hrst."""


class HRSTError(Exception):
    """Base class for all hrst errors."""


class InvalidArgumentError(HRSTError, ValueError):
    pass


class DegenerateFitError(HRSTError, ValueError):
    """Raised when a calibration set cannot determine a line."""


class WeightFormatError(HRSTError, ValueError):
    """Raised for malformed network weight files.

    ``layer`` holds the 1-based conv index being read when the error
    occurred, or None for header problems.
    """

    def __init__(self, message, layer=None):
        if layer is not None:
            message = f"conv{layer}: {message}"
        super().__init__(message)
        self.layer = layer


class ImageIOError(HRSTError, OSError):
    pass
