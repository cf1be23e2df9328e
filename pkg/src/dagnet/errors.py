"""Exception hierarchy shared across the package."""


class DagnetError(Exception):
    """Base class for all package errors."""


class ArgumentError(DagnetError, ValueError):
    """An argument is outside its documented domain."""


class DomainError(ArgumentError):
    """A quantity is undefined for the given input (e.g. density of order < 2)."""


class SizeError(DagnetError, ValueError):
    """Input exceeds a combinatorial guard."""


class FormatError(DagnetError, ValueError):
    """Malformed serialized input."""


class RetryExhaustedError(DagnetError, RuntimeError):
    """A bounded retry loop gave up."""


class BudgetError(ArgumentError):
    """An evaluation budget is too small for the requested method."""


class OperatorInapplicableError(DagnetError, ValueError):
    """A variation operator has no legal move on the given graph."""


class GraphError(ArgumentError):
    """A graph violates its structural invariants."""
