"""Error types raised by the engine. Each class name doubles as its error code."""

from typing import Any, Dict, Optional


class WorkflowError(Exception):
    """Base class for engine errors with a stable error code"""

    def __init__(self, message: str = '', **details: Any):
        self.message = message or self.__class__.__name__
        self.details: Dict[str, Any] = details
        super().__init__(self.message)

    @property
    def code(self) -> str:
        return self.__class__.__name__

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


# spec_model
class MalformedDocument(WorkflowError):
    pass


class MissingGoal(WorkflowError):
    pass


class InvalidBudget(WorkflowError):
    pass


class InvalidConstraints(WorkflowError):
    pass


class DuplicateResourceId(WorkflowError):
    pass


# library
class DuplicateId(WorkflowError):
    pass


class MissingSchema(WorkflowError):
    pass


# graph
class CyclicGraph(WorkflowError):
    pass


class PatchOutOfLocality(WorkflowError):
    pass


class PatchYieldsInvalidGraph(WorkflowError):
    pass


class CyclicReference(WorkflowError):
    pass


class EmptyGraph(WorkflowError):
    pass


# synthesis
class NoExecutableTopology(WorkflowError):
    pass


class UnmappableSchemas(WorkflowError):
    pass


# sandbox
class BuildExhausted(WorkflowError):
    """All build rounds failed; the last spec and the full report ride along"""

    def __init__(self, message: str = '', spec: Optional[Any] = None, report: Optional[Any] = None):
        super().__init__(message)
        self.spec = spec
        self.report = report


class UnbuiltSandbox(WorkflowError):
    pass


# runtime
class UnresolvedExecutor(WorkflowError):
    pass


class ProtocolViolation(WorkflowError):
    pass


class NegativeCost(WorkflowError):
    pass


class EmptyReference(WorkflowError):
    pass
