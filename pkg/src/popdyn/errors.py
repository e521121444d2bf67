"""Exception types raised by popdyn."""


class PopDynError(Exception):
    """Base class for all library errors."""


class InfeasibleLinkage(PopDynError, ValueError):
    pass


class NotOnManifold(PopDynError, ValueError):
    pass


class DegenerateDiagonal(PopDynError, ValueError):
    pass


class CollinearNeighbors(PopDynError, ValueError):
    pass


class DriftExceeded(PopDynError):
    def __init__(self, step: int, residual: float, bound: float):
        self.step = step
        self.residual = residual
        self.bound = bound
        super().__init__(
            f"closure drift {residual:.3e} exceeds bound {bound:.3e} at step {step}"
        )


class OriginUndefined(PopDynError, ValueError):
    pass


class OutsideLambda(PopDynError, ValueError):
    pass


class BranchAmbiguity(PopDynError):
    pass


class QuadratureFailure(PopDynError):
    pass


class MonotonicityViolation(PopDynError):
    def __init__(self, index: int, pair):
        self.index = index
        self.pair = pair
        super().__init__(
            f"rotation number not strictly monotone between grid points {index} and "
            f"{index + 1}: {pair[0]!r} vs {pair[1]!r}"
        )


class RelabelNotFound(PopDynError):
    pass


class ResolutionTooCoarse(PopDynError):
    pass
