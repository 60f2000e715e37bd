"""Exception types shared across the package."""


class PromsbError(Exception):
    """Base class for all promsb errors."""


class NegativeOffDiagonal(PromsbError):
    """A rate matrix has a negative off-diagonal entry."""


class NotIrreducible(PromsbError):
    """The positive-rate support graph is not strongly connected."""


class SingularSystem(PromsbError):
    """A linear solve failed or produced an invalid stationary vector."""


class DimensionMismatch(PromsbError):
    """Inputs have incompatible shapes."""


class ThetaTooSmall(PromsbError):
    """Requested theta is below max_i |G[i,i]|."""


class NonPositiveRecovery(PromsbError):
    """Eigenvalue inputs do not correspond to positive refractory rates."""


class ZeroDiagonal(PromsbError):
    """A zero diagonal entry makes the clumped kernel undefined."""


class SetsOverlap(PromsbError):
    """Subsets passed to a mixed-moment computation are not disjoint."""


class CombinatorialExplosion(PromsbError):
    """The number of multiset permutations exceeds the configured cap."""


class CapacityOverflow(PromsbError):
    """The product state space exceeds the configured size cap."""


class MaskViolation(PromsbError):
    """Parameters do not satisfy the constraint mask."""


class NonFiniteStart(PromsbError):
    """The Gibbs sampler's initial log-likelihood is not finite."""


class RunawayState(PromsbError):
    """A simulated count exceeded the runaway ceiling."""
