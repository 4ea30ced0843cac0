"""Exception types raised by the geometry and network routines."""


class GeometryError(Exception):
    """Base class for all errors raised by cnnpreimage."""


class DimensionMismatch(GeometryError, ValueError):
    pass


class DegenerateInput(GeometryError, ValueError):
    """A hyperplane normal (or other defining vector) is numerically zero."""


class EmptyIntersection(GeometryError):
    """A stacked linear system has no solution within ``eps_solve``."""


class SingularArrangement(GeometryError):
    """The weight matrix has rank < d, so the dual basis is undefined."""


class NoSolution(GeometryError):
    pass


class EmptyPreimage(GeometryError):
    """The requested output is not reachable from the non-negative orthant."""


class SamplingExhausted(GeometryError):
    pass


class NotCirculant(GeometryError, ValueError):
    pass


class ApexAtInfinity(GeometryError):
    """Row sum of a circulant layer is zero; the planes are parallel to the identity line."""


class PieceBudgetExceeded(GeometryError):
    pass


class ConfigError(GeometryError, ValueError):
    pass


class UnsupportedProjection(GeometryError, ValueError):
    pass
