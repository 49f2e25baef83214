"""Exception hierarchy.

Every error raised on purpose by the package derives from ``MutcauseError``
so callers (the CLI in particular) can map them onto exit codes.
"""


class MutcauseError(Exception):
    """Base class for all package errors."""


class GraphError(MutcauseError, ValueError):
    pass


class CycleError(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class UnknownNode(GraphError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class NotAdjacent(GraphError):
    pass


class GraphTooLarge(GraphError):
    pass


class DataError(MutcauseError, ValueError):
    """Problems with user-supplied data (CLI exit code 2)."""


class ParseError(DataError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)


class SchemaError(DataError):
    pass


class InvariantViolation(DataError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class EmptyDataset(DataError):
    pass


class DegenerateVariance(DataError):
    pass


class ShapeMismatch(MutcauseError, ValueError):
    pass


class DomainError(MutcauseError, ValueError):
    pass


class UnknownFamily(MutcauseError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class UnknownProject(MutcauseError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class SamplerError(MutcauseError, RuntimeError):
    pass


class DivergenceExplosion(SamplerError):
    pass


class NonFiniteGradient(SamplerError):
    pass


class InsufficientDraws(MutcauseError, ValueError):
    pass


class ManifestMismatch(DataError):
    pass


class ConfigError(DataError):
    pass
