"""Exception hierarchy.

The CLI maps these onto exit codes: DomainError -> 2, CapacityError -> 3.
"""


class GraphonError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GraphonError, ValueError):
    """An argument lies outside the domain of the operation."""


class FormatError(DomainError):
    """A graphon or graph file could not be parsed."""

    def __init__(self, message, *, path=None, line=None, field=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.field = field


class InvalidLabelingError(DomainError):
    pass


class StructuralError(DomainError):
    """Incompatible block structures (e.g. a coarsening that is not one)."""


class InfeasibleError(DomainError):
    """The target lies above the largest value attainable on the support."""


class WitnessNotFoundError(GraphonError):
    pass


class CapacityError(GraphonError):
    """The requested exact computation exceeds its size cap."""


class InsufficientConditioningError(GraphonError):
    def __init__(self, message, acceptance_rate):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate
