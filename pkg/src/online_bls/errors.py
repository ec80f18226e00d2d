"""Exception types raised across the package."""


class OnlineBLSError(Exception):
    pass


class DimensionMismatch(OnlineBLSError, ValueError):
    pass


class NotPositiveDefinite(OnlineBLSError, ValueError):
    pass


class SingularFactor(OnlineBLSError, ValueError):
    """A triangular factor has a (numerically) zero diagonal entry."""


class Singular(OnlineBLSError, ValueError):
    pass


class InvalidDimension(OnlineBLSError, ValueError):
    pass


class NonFiniteInput(OnlineBLSError, ValueError):
    pass


class InvalidLambda(OnlineBLSError, ValueError):
    pass


class InvalidDecay(OnlineBLSError, ValueError):
    pass


class InvalidLabel(OnlineBLSError, ValueError):
    """Target is not a strict one-hot vector."""


class SchemaMismatch(OnlineBLSError, ValueError):
    pass


class EmptyAfterCleaning(OnlineBLSError, ValueError):
    pass


class LabelOutOfRange(OnlineBLSError, IndexError):
    pass


class EmptyMatrix(OnlineBLSError, ValueError):
    pass


class EmptyHistory(OnlineBLSError, ValueError):
    pass


class IncompatibleConfigs(OnlineBLSError, ValueError):
    pass


class PartialFailure(OnlineBLSError, RuntimeError):
    def __init__(self, failed, message=None):
        self.failed = dict(failed)
        if message is None:
            parts = [f"trial {i}: {err!r}" for i, err in sorted(self.failed.items())]
            message = "failed trials -> " + "; ".join(parts)
        super().__init__(message)
