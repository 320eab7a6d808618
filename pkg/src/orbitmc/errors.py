"""Exception hierarchy shared by all modules."""


class OrbitMCError(Exception):
    """Base class for every error raised by orbitmc."""


class DimensionMismatch(OrbitMCError, ValueError):
    pass


class InvalidDistribution(OrbitMCError, ValueError):
    pass


class InvalidPartition(OrbitMCError, ValueError):
    pass


class NonStochastic(OrbitMCError, ValueError):
    pass


class NotReversible(OrbitMCError, ValueError):
    pass


class NotStationary(OrbitMCError, ValueError):
    pass


class AlphaOutOfRange(OrbitMCError, ValueError):
    pass


class InternalConsistencyError(OrbitMCError, AssertionError):
    """Two independent computation paths disagreed."""


class AllSingletons(OrbitMCError, ValueError):
    pass


class NotSorted(OrbitMCError, ValueError):
    pass


class ThetaDegenerate(OrbitMCError, ValueError):
    pass


class NotCentered(OrbitMCError, ValueError):
    pass


class SingularFundamentalMatrix(OrbitMCError, ArithmeticError):
    pass


class DegenerateGap(OrbitMCError, ArithmeticError):
    pass


class SupportViolation(OrbitMCError, ValueError):
    """P puts mass where Q has none, so D(P||Q) is infinite."""


class QNotInvariant(OrbitMCError, ValueError):
    pass


class MassNotDominant(OrbitMCError, ValueError):
    pass


class WrongPartitionShape(OrbitMCError, ValueError):
    pass


class NegativeInducedEntry(OrbitMCError, ValueError):
    pass


class NotFactorable(OrbitMCError, ValueError):
    pass


class BadShape(OrbitMCError, ValueError):
    pass


class TooLarge(OrbitMCError, ValueError):
    pass


class NoConvergence(OrbitMCError, RuntimeError):
    pass


class ConfigParse(OrbitMCError, ValueError):
    pass


class CheckFailed(OrbitMCError, RuntimeError):
    pass
