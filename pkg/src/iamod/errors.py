"""Exception hierarchy.

Every error raised on bad input derives from :class:`DataError`, which the CLI
maps to its data/validation exit code. Solver outcomes that mean "no answer
exists" derive from :class:`InfeasibleError`.
"""


class IamodError(Exception):
    """Base class for all package errors."""


class DataError(IamodError):
    """Input data failed validation."""


# network
class DuplicateNodeId(DataError):
    pass


class DanglingArcEndpoint(DataError):
    pass


class IllegalModeSwitch(DataError):
    pass


class InternalArcInTerminalLayer(DataError):
    pass


class NegativeTravelTime(DataError):
    pass


class SelfLoopArc(DataError):
    pass


class DuplicateArcId(DataError):
    pass


class LayerMismatch(DataError):
    """A within-layer arc whose endpoints are not both in that layer."""


# scenario
class UnknownNode(DataError):
    pass


class DemandRateNonPositive(DataError):
    pass


class UnitTagMissing(DataError):
    pass


class RegionlessDemand(DataError):
    pass


class InvalidParameter(DataError):
    pass


# lp
class ModelInvalid(DataError):
    pass


class NameCollisionAfterSanitize(DataError):
    pass


class UnknownVariableName(DataError):
    pass


class MpsParseError(DataError):
    pass


class InfeasibleError(IamodError):
    """The optimization problem has no feasible point."""


class UnboundedError(IamodError):
    pass


class SolverError(IamodError):
    """Iteration limit or numerical breakdown."""


# pathalloc
class EmptySupport(IamodError):
    pass


class PathExplosion(IamodError):
    def __init__(self, count, cap):
        super().__init__(f"more than {cap} paths (found at least {count})")
        self.count = count
        self.cap = cap


class ReconstructionInfeasible(IamodError):
    pass


# report
class EmptyInput(DataError):
    pass


class BinMismatch(DataError):
    pass
