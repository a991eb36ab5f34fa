"""Exception hierarchy shared across the cfaudit package."""

from __future__ import annotations


class CfauditError(ValueError):
    """Root of every error raised by cfaudit on bad input."""


class UndefinedRatioError(CfauditError):
    """A likelihood ratio of the form 0/0."""


class ContradictionError(CfauditError):
    """Certain confirmation combined with certain refutation."""


class NetworkError(CfauditError):
    """Malformed rule or inference network."""


class CycleError(NetworkError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cycle detected: " + " -> ".join(cycle))


class ModelError(CfauditError):
    """Malformed joint model or query against it."""


class EventError(ModelError):
    """An event references unknown variables or outcomes."""


class ImpossibleConditionError(ModelError):
    """Conditioning on an event of probability zero."""


class DiagramError(CfauditError):
    """Malformed influence diagram or rejected edit."""


class IncompleteDiagramError(DiagramError):
    """Inference requested on a diagram with stale nodes."""


class ConsistencyError(CfauditError):
    """Two criteria that must agree disagreed."""


class ParseError(CfauditError):
    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<text>"):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        location = f"{source}:{line}:{column}" if line else source
        super().__init__(f"{location}: {message}")
