"""Exception hierarchy shared by all authplan modules."""

from __future__ import annotations


class AuthPlanError(ValueError):
    """Base class for every error raised on bad input."""


class GraphError(AuthPlanError):
    pass


class DuplicateNode(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class DanglingEdge(GraphError):
    pass


class CycleDetected(GraphError):
    pass


class SourceWithInEdges(GraphError):
    pass


class DestinationWithOutEdges(GraphError):
    pass


class RelayWithZeroInDegree(GraphError):
    pass


class DisconnectedRelay(GraphError):
    pass


class UnknownEdge(AuthPlanError):
    pass


class ProbabilityOutOfRange(AuthPlanError):
    pass


class InputOutOfRange(AuthPlanError):
    pass


class NotACodingNode(AuthPlanError):
    pass


class StrategyError(AuthPlanError):
    """Strategy does not match the relay set or uses a label invalid for a node class."""


class CapacityExceeded(AuthPlanError):
    """Strategy space too large for exhaustive search."""


class ParseError(AuthPlanError):
    """Malformed input file. ``path`` locates the offending field, e.g. ``edges[2].to``."""

    def __init__(self, message: str, path: str = "", source: str | None = None):
        self.path = path
        self.source = source
        where = ""
        if source:
            where += f"{source}: "
        if path:
            where += f"{path}: "
        super().__init__(where + message)
