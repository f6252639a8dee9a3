"""Exception types shared across the package."""


class SupertransportError(Exception):
    """Base class for all package errors."""


class AlgebraMismatchError(SupertransportError):
    """Operands belong to different Grassmann algebras or backends."""


class ParityError(SupertransportError):
    """An argument has the wrong Z2 parity for the requested operation."""


class NotInvertibleError(SupertransportError):
    """Inversion requested for an element with vanishing body."""


class DimensionError(SupertransportError):
    """Matrix or basis dimensions are inconsistent."""


class ChartMismatchError(SupertransportError):
    """Operands live on different coordinate charts."""


class FrameError(SupertransportError):
    """A frame is degenerate or cannot be inverted exactly."""


class CalibrationError(SupertransportError):
    """No sign/normalization choice satisfies the pinned identities."""


class InputError(SupertransportError):
    """Malformed external input (JSON/TOML problem files)."""
