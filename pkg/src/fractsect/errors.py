"""Exception and warning types raised across the package."""


class FractsectError(ValueError):
    """Base class for all input/precondition failures."""


class EmptyInput(FractsectError):
    pass


class MalformedCsv(FractsectError):
    def __init__(self, row, detail=""):
        self.row = row
        super().__init__(f"malformed CSV at data row {row}" + (f": {detail}" if detail else ""))


class NonPositivePrice(FractsectError):
    def __init__(self, row, value=None):
        self.row = row
        self.value = value
        super().__init__(f"non-positive price {value!r} at data row {row}")


class MissingColumn(FractsectError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"missing column {column!r}")


class WrongKind(FractsectError):
    pass


class LagTooLarge(FractsectError):
    pass


class TooShort(FractsectError):
    pass


class InsufficientExtrema(FractsectError):
    """Fewer than two maxima or two minima: the signal is a residual."""


class BadBounds(FractsectError):
    pass


class WindowOutOfRange(FractsectError):
    pass


class SeriesTooShort(FractsectError):
    pass


class RegimeTooSparse(FractsectError):
    pass


class GridTooCoarse(FractsectError):
    pass


class MissingQ2(FractsectError):
    pass


class BadSpec(FractsectError):
    pass


class EmbeddingFailure(FractsectError):
    pass


class MaxSiftIterationsExceeded(UserWarning):
    """Sifting hit its iteration cap; the last iterate was kept."""


class DegenerateCorrelation(UserWarning):
    """An IMF or the source signal has zero variance; its correlation is taken as 0."""


class ThresholdPole(UserWarning):
    """max correlation <= 0.3, where the selection threshold is undefined; all IMFs kept."""
