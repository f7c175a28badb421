class ModspaceError(Exception):
    """Base class for all errors raised by modspace."""


class GraphError(ModspaceError):
    pass


class DisconnectedError(GraphError):
    pass


class EmptyBallError(ModspaceError):
    pass


class DimensionMismatchError(ModspaceError):
    pass


class MeshTooCoarseError(ModspaceError):
    pass


class CurveError(ModspaceError):
    pass


class ConstantCurveError(CurveError):
    pass


class NoPathError(CurveError):
    pass


class ZeroLengthError(CurveError):
    pass


class IsolatedPointError(CurveError):
    pass


class MissingEdgeDensityError(CurveError):
    pass


class EmptyFamilyError(ModspaceError):
    pass


class NonconvergenceError(ModspaceError):
    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class TooLargeError(ModspaceError):
    pass


class TooFewPointsError(ModspaceError):
    pass


class WrongGeneratorError(ModspaceError):
    pass


class DirectionViolationError(ModspaceError):
    pass


class DependentDirectionsError(ModspaceError):
    pass
