"""Exception hierarchy shared by all modules."""


class MusmError(Exception):
    """Base class for every error raised by this package."""


class NotHermitian(MusmError, ValueError):
    pass


class NotPsd(MusmError, ValueError):
    pass


class RankDeficient(MusmError, ValueError):
    pass


class NonFiniteIntegrand(MusmError, ArithmeticError):
    pass


class InvalidBeta(MusmError, ValueError):
    pass


class InvalidRho(MusmError, ValueError):
    pass


class InsufficientSamples(MusmError, ValueError):
    pass


class UnsupportedOrder(MusmError, ValueError):
    pass


class LengthMismatch(MusmError, ValueError):
    pass


class IndexOutOfRange(MusmError, IndexError):
    pass


class SingleUser(MusmError, ValueError):
    pass


class DimensionViolation(MusmError, ValueError):
    """N_t is too small to null the interference of the other users."""


class BeamCountViolation(MusmError, ValueError):
    pass


class ZeroMatrix(MusmError, ValueError):
    pass


class DimensionMismatch(MusmError, ValueError):
    pass


class LayerExcess(MusmError, ValueError):
    """More spatial layers than receive antennas."""


class DivergentRegion(MusmError, ValueError):
    pass


class BudgetExceeded(MusmError, ValueError):
    pass


class NoTheoryAvailable(BudgetExceeded):
    """No analytical bound exists for the requested system."""


class ParseError(MusmError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MusmError, ValueError):
    pass
