"""Linear solvers returning Gaussian posteriors over the solution."""

from .bayescg import (
    bayescg,
    bayescg_factored,
    bayescg_posterior_direct,
    bayescg_random_directions,
)
from .cg import cg
from .krylov import KrylovBasis, KrylovPosterior, krylov_approx, krylov_basis, krylov_full
from .lanczos import modified_lanczos
from .prior import PriorSpec, SolveTrace
from .variants import SolverVariant, default_prior, solve_checkpoints

__all__ = [
    "PriorSpec",
    "SolveTrace",
    "KrylovPosterior",
    "KrylovBasis",
    "SolverVariant",
    "cg",
    "bayescg",
    "bayescg_posterior_direct",
    "bayescg_random_directions",
    "bayescg_factored",
    "modified_lanczos",
    "krylov_basis",
    "krylov_full",
    "krylov_approx",
    "default_prior",
    "solve_checkpoints",
]
