"""Exception hierarchy.

``NumericalError`` subclasses map to CLI exit status 2; everything else that
derives from ``FouError`` is a usage/precondition problem (exit status 1).
"""


class FouError(Exception):
    pass


class NumericalError(FouError):
    pass


class NonPositiveDefiniteEmbedding(NumericalError):
    pass


class FactorizationFailure(NumericalError):
    pass


class OverflowDetected(NumericalError):
    pass


class ZeroDenominator(NumericalError):
    """The estimator cannot identify theta from this input."""


class GridTooLarge(FouError):
    pass


class MemoryBudgetExceeded(FouError):
    pass


class MissingDriver(FouError):
    pass


class ScanTooLarge(FouError):
    pass
