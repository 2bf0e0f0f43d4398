"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes or exceed the dense size limit."""


class NotPSDError(ValueError):
    """A matrix expected to be positive semi-definite is not."""


class NotSymmetricError(ValueError):
    """A matrix expected to be symmetric is not."""


class BreakdownError(ArithmeticError):
    """An iteration hit a zero or negative curvature denominator."""


class SingularInformationError(ArithmeticError):
    """The search-direction information matrix is numerically singular."""


class IllConditionedFactorsError(ArithmeticError):
    """Krylov factor columns are too close to linearly dependent."""


class MatrixMarketError(ValueError):
    """A MatrixMarket file could not be parsed into an SPD matrix."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""


class SkipBudgetExceeded(RuntimeError):
    """Too many test problems broke down for the results to be trusted."""
