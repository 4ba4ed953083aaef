class LambdaLocError(Exception):
    """Base class for library errors."""


class DimensionMismatch(LambdaLocError, ValueError):
    pass


class AnticommutingError(LambdaLocError, ValueError):
    """beta(a, b) requested for an anticommuting pair."""


class DenseLimitError(LambdaLocError, ValueError):
    """Dense oracle or full expectation table requested beyond the size limit."""


class InvalidOperator(LambdaLocError, ValueError):
    pass


class InvalidPair(LambdaLocError, ValueError):
    pass


class OutsidePolytope(LambdaLocError, ValueError):
    pass


class SignalingTable(LambdaLocError, ValueError):
    pass


class ResourceGuardExceeded(LambdaLocError, RuntimeError):
    pass


class InfeasibleLP(LambdaLocError, RuntimeError):
    pass


class UnboundedLP(LambdaLocError, RuntimeError):
    pass


class IterationLimit(LambdaLocError, RuntimeError):
    pass


class ScheduleError(LambdaLocError, ValueError):
    pass


class UnsupportedCatalog(LambdaLocError, ValueError):
    """No builder for the requested (name, n)."""
