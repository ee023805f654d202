"""Exception types raised across the package."""


class MemscError(Exception):
    """Base class for all package errors."""


class ZeroVector(MemscError, ValueError):
    pass


class DimensionMismatch(MemscError, ValueError):
    pass


class EmptyMemory(MemscError, LookupError):
    pass


class NonPositiveBeta(MemscError, ValueError):
    pass


class InvalidHit(MemscError, ValueError):
    pass


class LengthMismatch(MemscError, ValueError):
    pass


class InvalidDims(MemscError, ValueError):
    pass


class InfeasibleSeparation(MemscError, RuntimeError):
    pass


class EmptyCounts(MemscError, ValueError):
    pass


class DivByZero(MemscError, ZeroDivisionError):
    pass


class Infeasible(MemscError, LookupError):
    """No swept threshold meets the distortion target."""


class NoMatchedPair(MemscError, LookupError):
    pass


class ConditionViolation(MemscError, ValueError):
    """Drift-analysis parameters break one of its preconditions."""

    def __init__(self, condition: str, message: str):
        super().__init__(f"{condition}: {message}")
        self.condition = condition


class ConfigError(MemscError, ValueError):
    """Invalid configuration value. ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
