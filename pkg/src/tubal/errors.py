"""Exception hierarchy shared by every module of the package."""


class TubalError(Exception):
    """Base class for all errors raised by :mod:`tubal`."""


class InvalidConfig(TubalError, ValueError):
    pass


class DimMismatch(TubalError, ValueError):
    pass


class InvalidRank(TubalError, ValueError):
    pass


class SymmetryViolation(TubalError, ValueError):
    """Fourier data is not the transform of a real tensor."""


class NumericalFailure(TubalError, RuntimeError):
    pass


class NonFinite(NumericalFailure):
    """The solver objective became NaN or infinite."""


class NormNotUnit(TubalError, ValueError):
    pass


class ZeroReference(TubalError, ValueError):
    pass


class ImageFormatError(TubalError, ValueError):
    pass
