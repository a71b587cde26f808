"""Exception types shared across the package."""


class NegativePowerOnNonzeroMean(ValueError):
    """A negative-order multiplier was applied to a field with a nonzero mean."""


class NegativeIndexOnNonzeroMean(ValueError):
    """A negative-index homogeneous Sobolev norm was requested for a field with a mean."""


class GridTooCoarse(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


class NotDivergenceFree(ValueError):
    pass


class EmptySeries(ValueError):
    pass


class TooFewSamples(ValueError):
    pass


class WindowUnresolvable(ValueError):
    pass


class MissingColumn(KeyError):
    pass


class PreconditionViolated(ValueError):
    pass


class ConfigInvalid(ValueError):
    pass


class CFLViolation(ValueError):
    pass


class NonFiniteState(RuntimeError):
    """Raised when a NaN/Inf coefficient appears; carries the last good time."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ViolationDetected(AssertionError):
    def __init__(self, message, t, p):
        super().__init__(message)
        self.t = t
        self.p = p


class UnresolvableShell(UserWarning):
    """The low-frequency ball S(t) holds no lattice mode besides the origin."""
