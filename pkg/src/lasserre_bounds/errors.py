"""Exception types shared across the package."""


class LasserreError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(LasserreError, ValueError):
    pass


class SingularMapError(LasserreError, ValueError):
    pass


class UnsupportedDomainError(LasserreError, ValueError):
    """Raised when a set cannot be represented by one of the supported kinds."""


class IncompatibleMeasureError(LasserreError, ValueError):
    pass


class DegenerateGeometryError(LasserreError, ValueError):
    pass


class NumericalError(LasserreError, ArithmeticError):
    """Cholesky breakdown, insufficient working precision or a bad residual."""


class PrecisionError(NumericalError):
    pass


class OutOfRegimeError(LasserreError, ValueError):
    """The needle schedule h(r) is not yet valid for this r; increase r."""


class ConvergedExactly(LasserreError, ValueError):
    """A rate fit was requested on a window where the error is already zero."""


class PreconditionError(LasserreError, ValueError):
    pass


class QuadratureBudgetError(LasserreError, ValueError):
    pass
