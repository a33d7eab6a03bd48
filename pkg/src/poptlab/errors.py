"""Exception types raised across poptlab."""


class PoptlabError(ValueError):
    """Base class for all poptlab errors."""


class ShapeError(PoptlabError):
    pass


class NotHermitianError(PoptlabError):
    pass


class NotUnitaryError(PoptlabError):
    pass


class NotPSDError(PoptlabError):
    pass


class NotPOPTError(PoptlabError):
    pass


class NonUnitTraceError(PoptlabError):
    pass


class InvalidMeasurementError(PoptlabError):
    pass


class SameStateError(PoptlabError):
    """Raised when a distinguishing measurement is requested for a state and itself."""


class NoSeparatingRowError(PoptlabError):
    """No row of the three-qubit parity table separates the requested pair."""
