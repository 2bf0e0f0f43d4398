"""Bayesian conjugate gradients, Krylov posteriors and calibration tests."""

from . import calibration, gaussians, linalg, solvers, wasserstein
from .errors import (
    BreakdownError,
    ConfigError,
    DimensionError,
    IllConditionedFactorsError,
    MatrixMarketError,
    NotPSDError,
    NotSymmetricError,
    SingularInformationError,
    SkipBudgetExceeded,
)
from .gaussians import Gaussian, RandomSource
from .linalg import SpdMatrix

__version__ = "0.1.0"
