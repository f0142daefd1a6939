"""Exception types shared across the package."""


class RegionalMpcError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RegionalMpcError):
    """A configuration file could not be parsed."""


class DimensionError(RegionalMpcError):
    """Matrix or vector dimensions are inconsistent."""


class AssumptionError(RegionalMpcError):
    """A standing assumption on the problem data is violated."""


class NoConvergence(RegionalMpcError):
    """An iterative solver failed to reach its tolerance."""


class NoTermination(RegionalMpcError):
    """The invariant-set recursion did not terminate within the step cap."""


class RankDeficient(RegionalMpcError):
    """A constraint submatrix does not have full row rank."""


class Singular(RegionalMpcError):
    """A square system matrix is singular."""


class InfeasibleProblem(RegionalMpcError):
    """The problem has no feasible point."""


class MaxIterations(RegionalMpcError):
    """Iteration cap exceeded."""


class FamilyTooLarge(RegionalMpcError):
    """A candidate family would exceed the enumeration cap."""


class Unbounded(RegionalMpcError):
    """The polytope is unbounded where a bounded one is required."""


class EmptyPolytope(RegionalMpcError):
    """The polytope is empty where a nonempty one is required."""


class IndexOutOfRange(RegionalMpcError):
    """A constraint index lies outside the valid range."""


class ProtocolError(RegionalMpcError):
    """A malformed or out-of-sequence frame was received."""
