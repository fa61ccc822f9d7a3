"""Exception types raised by the planner."""


class PlannerError(Exception):
    """Base class for all planner failures."""


class DomainError(PlannerError, ValueError):
    """An argument lies outside the domain of a capacity/NIS function."""


class ValidationError(PlannerError, ValueError):
    """Input data is malformed or violates a precondition."""


class CapacityError(PlannerError):
    """The problem is too large for exhaustive subset enumeration."""


class NotOnDominantFace(ValidationError):
    """The requested rate tuple is not a base of the capacity polymatroid.

    The membership verdict is attached as ``verdict``.
    """

    def __init__(self, verdict):
        self.verdict = verdict
        super().__init__(f"rate tuple is not on the dominant face: {verdict.describe()}")


class InvariantViolation(PlannerError, RuntimeError):
    """An internal invariant failed (numerical failure or a logic fault)."""


class PartitionError(InvariantViolation):
    """Partitioning a parent region between two children failed.

    ``node_id`` names the parent tree node when known.
    """

    def __init__(self, message, node_id=None):
        self.node_id = node_id
        if node_id is not None:
            message = f"node {node_id}: {message}"
        super().__init__(message)
