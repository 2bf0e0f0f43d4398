"""Bayesian conjugate gradient variants with explicit priors."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import BreakdownError, DimensionError, SingularInformationError
from ..gaussians import Gaussian, _as_generator
from ..linalg import as_spd
from .lanczos import modified_lanczos
from .prior import PriorSpec, SolveTrace

__all__ = [
    "bayescg",
    "bayescg_posterior_direct",
    "bayescg_random_directions",
    "bayescg_factored",
]

# Relative curvature floor: eta = s^T A Sigma0 A s is compared with
# ||A s|| * ||Sigma0 A s|| so the test does not depend on the scaling of A.
_CURVATURE_TOL = 1e-14


def _setup(A, b, prior):
    A = as_spd(A)
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise DimensionError(f"rhs of shape {b.shape} vs order {A.n}")
    if not isinstance(prior, PriorSpec):
        raise TypeError("prior must be a PriorSpec")
    prior.check(A)
    return A, b


def bayescg(A, b, prior, m, res_tol=0.0):
    """Run ``m`` iterations of BayesCG with a dense posterior covariance.

    Parameters
    ----------
    A : SpdMatrix or array_like, shape (n, n)
    b : ndarray, shape (n,)
    prior : PriorSpec
        Any prior with an explicit covariance.
    m : int
        Number of iterations.
    res_tol : float, default 0
        Stop early when ``||r_k|| <= res_tol * ||r_0||``. A zero residual
        always stops the iteration.

    Returns
    -------
    posterior : Gaussian
        ``N(x_m, Sigma_m)`` with a dense covariance.
    trace : SolveTrace

    Raises
    ------
    BreakdownError
        If a search direction carries no curvature under the prior.
    """
    A, b = _setup(A, b, prior)
    x = prior.x0.copy()
    Sigma = prior.cov_dense(A)
    r = b - A @ x
    s = r.copy()
    rr = float(r @ r)
    r0 = np.sqrt(rr)
    xs, res, steps, dirs = [x.copy()], [r0], [], []
    for _ in range(int(m)):
        if rr == 0.0 or np.sqrt(rr) <= res_tol * r0:
            break
        dirs.append(s)
        As = A @ s
        # Sigma0 A s is s itself under the inverse prior; skip the solve
        q = s.copy() if prior.kind == "inverse" else prior.apply(A, As)
        eta = float(As @ q)
        if eta <= _CURVATURE_TOL * np.linalg.norm(As) * np.linalg.norm(q):
            raise BreakdownError(f"search direction has curvature {eta:.3e}")
        alpha = rr / eta
        x = x + alpha * q
        Sigma -= np.outer(q, q) / eta
        r = r - alpha * (As if prior.kind == "inverse" else A @ q)
        rr_new = float(r @ r)
        s = r + (rr_new / rr) * s
        rr = rr_new
        xs.append(x.copy())
        res.append(np.sqrt(rr))
        steps.append(alpha)
    Sigma = 0.5 * (Sigma + Sigma.T)
    S = np.array(dirs).T if dirs else np.zeros((A.n, 0))
    trace = SolveTrace(np.array(xs), np.array(res), np.array(steps), len(steps),
                       directions=S)
    return Gaussian.dense(x, Sigma), trace


def bayescg_posterior_direct(A, b, prior, S, diagonal=False):
    """Posterior from a given block of search directions.

    Parameters
    ----------
    A : SpdMatrix or array_like, shape (n, n)
    b : ndarray, shape (n,)
    prior : PriorSpec
    S : ndarray, shape (n, m)
        Search directions. With ``m = 0`` the prior is returned.
    diagonal : bool, default False
        Use only the diagonal of ``S^T A Sigma0 A S``, valid when the
        directions are conjugate under ``A Sigma0 A``.

    Returns
    -------
    Gaussian
        Dense posterior, or a point mass when ``S`` has ``n`` columns.

    Raises
    ------
    SingularInformationError
        If ``S^T A Sigma0 A S`` has condition number above ``1e14``.
    """
    A, b = _setup(A, b, prior)
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != A.n:
        raise DimensionError(f"directions of shape {S.shape} vs order {A.n}")
    Sigma0 = prior.cov_dense(A)
    if S.shape[1] == 0:
        return Gaussian.dense(prior.x0, Sigma0)
    r0 = b - A @ prior.x0
    AS = A @ S
    Q = S.copy() if prior.kind == "inverse" else prior.apply(A, AS)
    if diagonal:
        lam = np.einsum("ij,ij->j", AS, Q)
        if lam.min() <= 0 or lam.max() / lam.min() > 1e14:
            raise SingularInformationError("information matrix is singular")
        x = prior.x0 + Q @ ((S.T @ r0) / lam)
        Sigma = Sigma0 - (Q / lam) @ Q.T
    else:
        Lam = AS.T @ Q
        Lam = 0.5 * (Lam + Lam.T)
        if np.linalg.cond(Lam) > 1e14:
            raise SingularInformationError("information matrix is singular")
        cf = scipy.linalg.cho_factor(Lam)
        x = prior.x0 + Q @ scipy.linalg.cho_solve(cf, S.T @ r0)
        Sigma = Sigma0 - Q @ scipy.linalg.cho_solve(cf, Q.T)
    if S.shape[1] == A.n:
        # n independent directions leave no uncertainty; the downdate
        # above would only hold rounding noise
        return Gaussian.dirac(x)
    return Gaussian.dense(x, 0.5 * (Sigma + Sigma.T))


def bayescg_random_directions(A, b, prior, m, rng, eps=1e-12):
    """BayesCG along directions that do not depend on ``b``.

    The first direction is standard normal; the rest extend it to a basis
    of its Krylov space under ``A Sigma0 A``, orthonormal in the same
    inner product. The posterior covariance therefore depends only on
    ``A``, the prior and the random stream.

    Parameters
    ----------
    A : SpdMatrix or array_like, shape (n, n)
    b : ndarray, shape (n,)
    prior : PriorSpec
    m : int
    rng : RandomSource, numpy Generator or seed
    eps : float, default 1e-12
        Lanczos breakdown tolerance.

    Returns
    -------
    posterior : Gaussian
    trace : SolveTrace
        Partial means ``x_0, ..., x_m`` along the same directions.
    """
    A, b = _setup(A, b, prior)
    gen = _as_generator(rng)
    s1 = gen.standard_normal(A.n)
    S = modified_lanczos(lambda w: A @ prior.apply(A, A @ w), s1, m, eps)
    post = bayescg_posterior_direct(A, b, prior, S, diagonal=True)
    return post, direction_trace(A, b, prior, S, m)


def direction_trace(A, b, prior, S, m):
    """Partial posterior means along conjugate directions ``S``."""
    r0 = b - A @ prior.x0
    AS = A @ S
    Q = prior.apply(A, AS)
    steps = (S.T @ r0) / np.einsum("ij,ij->j", AS, Q)
    xs = prior.x0 + np.vstack([np.zeros(A.n), np.cumsum(Q * steps, axis=1).T])
    res = np.linalg.norm(b[None, :] - (A @ xs.T).T, axis=1)
    grade = S.shape[1] if S.shape[1] < m else None
    return SolveTrace(xs, res, steps, S.shape[1], grade)


def bayescg_factored(A, b, x0, F0, m):
    """BayesCG that keeps the posterior covariance as a factor.

    Parameters
    ----------
    A : SpdMatrix or array_like, shape (n, n)
    b : ndarray, shape (n,)
    x0 : ndarray, shape (n,)
    F0 : ndarray, shape (n, l)
        Prior covariance factor, ``Sigma0 = F0 @ F0.T``.
    m : int

    Returns
    -------
    x_m : ndarray, shape (n,)
    F_m : ndarray, shape (n, l)
        ``F_m @ F_m.T`` equals the posterior covariance.
    """
    A = as_spd(A)
    b = np.asarray(b, dtype=float)
    F0 = np.asarray(F0, dtype=float)
    if F0.ndim != 2 or F0.shape[0] != A.n or b.shape != (A.n,):
        raise DimensionError(f"factor {F0.shape}, rhs {b.shape}, order {A.n}")
    x = np.array(x0, dtype=float)
    r = b - A @ x
    s = r.copy()
    rr = float(r @ r)
    P = np.zeros((F0.shape[1], int(m)))
    for k in range(int(m)):
        if rr == 0.0:
            break
        As = A @ s
        p = F0.T @ As
        q = F0 @ p
        eta = float(p @ p)
        if eta <= _CURVATURE_TOL * np.linalg.norm(As) * np.linalg.norm(q):
            raise BreakdownError(f"search direction has curvature {eta:.3e}")
        # unit columns make I - P P^T an orthogonal projector
        P[:, k] = p / np.sqrt(eta)
        alpha = rr / eta
        x = x + alpha * q
        r = r - alpha * (A @ q)
        rr_new = float(r @ r)
        s = r + (rr_new / rr) * s
        rr = rr_new
    # columns left at zero after an exact solve do not change F
    F = F0 - (F0 @ P) @ P.T
    return x, F
