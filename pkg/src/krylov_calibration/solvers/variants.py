"""Named solver configurations used by the calibration experiments."""

from __future__ import annotations

from enum import Enum

import numpy as np

from ..linalg import as_spd
from .bayescg import bayescg, bayescg_posterior_direct, direction_trace
from .krylov import krylov_approx, krylov_basis
from .lanczos import modified_lanczos
from .prior import PriorSpec

__all__ = ["SolverVariant", "default_prior", "solve_checkpoints"]


class SolverVariant(str, Enum):
    """Solver used to produce posteriors in an experiment."""

    RANDOM_DIRECTIONS = "random-directions"
    INVERSE_PRIOR = "inverse-prior"
    KRYLOV_FULL = "krylov-full"
    KRYLOV_APPROX = "krylov-approx"

    @property
    def uses_krylov_prior(self):
        return self in (SolverVariant.KRYLOV_FULL, SolverVariant.KRYLOV_APPROX)


def default_prior(variant, n):
    """``N(0, A^{-1})`` for explicit-prior variants, the Krylov prior otherwise."""
    variant = SolverVariant(variant)
    if variant.uses_krylov_prior:
        return PriorSpec.krylov(np.zeros(n))
    return PriorSpec.inverse(np.zeros(n))


def solve_checkpoints(variant, A, b, checkpoints, rng=None, prior=None,
                      approx_rank=None, eps=1e-12):
    """Posteriors of one solve at several iteration counts.

    Work is shared between checkpoints where the method allows it: one
    Lanczos basis serves every checkpoint of the full Krylov and random
    direction variants.

    Parameters
    ----------
    variant : SolverVariant or str
    A : SpdMatrix
    b : ndarray, shape (n,)
    checkpoints : sequence of int
    rng : numpy Generator, optional
        Needed by the random-direction variant only.
    prior : PriorSpec, optional
        Defaults to :func:`default_prior`.
    approx_rank : int, optional
        Rank ``d`` of the approximate Krylov posterior.
    eps : float, default 1e-12
        Lanczos breakdown tolerance.

    Returns
    -------
    posteriors : list of Gaussian
        One per checkpoint.
    trace : SolveTrace
        Iterates up to the largest checkpoint.
    """
    variant = SolverVariant(variant)
    A = as_spd(A)
    checkpoints = [int(c) for c in checkpoints]
    mmax = max(checkpoints)
    if prior is None:
        prior = default_prior(variant, A.n)

    if variant is SolverVariant.KRYLOV_FULL:
        basis = krylov_basis(A, b, prior.x0, eps)
        posts = [basis.posterior(c).gaussian() for c in checkpoints]
        return posts, basis.solve_trace(mmax)

    if variant is SolverVariant.KRYLOV_APPROX:
        if approx_rank is None:
            raise ValueError("the approximate Krylov posterior needs approx_rank")
        posts, trace = [], None
        for c in checkpoints:
            post = krylov_approx(A, b, prior.x0, c, approx_rank)
            posts.append(post.gaussian())
            if c == mmax:
                trace = post.trace
        return posts, trace

    if variant is SolverVariant.INVERSE_PRIOR:
        posts, trace = [], None
        for c in checkpoints:
            post, tr = bayescg(A, b, prior, c)
            posts.append(post)
            if c == mmax:
                trace = tr
        return posts, trace

    # random directions: one basis, nested prefixes
    gen = rng if rng is not None else np.random.default_rng()
    s1 = gen.standard_normal(A.n)
    S = modified_lanczos(lambda w: A @ prior.apply(A, A @ w), s1, mmax, eps)
    posts = [bayescg_posterior_direct(A, b, prior, S[:, :c], diagonal=True)
             for c in checkpoints]
    return posts, direction_trace(A, b, prior, S, mmax)
