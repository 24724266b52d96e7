"""Exception hierarchy shared by all negspec modules."""


class NegspecError(Exception):
    """Base class for every error raised by the package."""


class DomainError(NegspecError, ValueError):
    """An argument lies outside the domain of the operation (bad index, size, range)."""


class ValidationError(NegspecError, ValueError):
    """An input object violates a structural invariant (unitarity, hermiticity, ...)."""


class NumericalError(NegspecError, RuntimeError):
    """A numerical routine could not reach its accuracy target."""


class DecompositionError(NumericalError):
    pass


class ConsistencyError(NumericalError):
    """Two independent routes to the same quantity disagree."""


class EmptyResultError(NegspecError, ValueError):
    pass


class InsufficientDataError(NegspecError, ValueError):
    pass


class DivergenceUndefinedError(NegspecError, ValueError):
    pass


class IncompleteDataError(NegspecError, ValueError):
    pass


class InfeasibleTargetError(NegspecError, ValueError):
    pass


class ConfigError(NegspecError, ValueError):
    pass


class SchemaVersionError(NegspecError, ValueError):
    """Persisted results were written with an incompatible schema."""


class RunError(NegspecError, RuntimeError):
    pass
