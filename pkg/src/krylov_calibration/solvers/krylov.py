"""BayesCG under the Krylov prior, full and low-rank approximate."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import BreakdownError, DimensionError
from ..gaussians import Gaussian
from ..linalg import as_spd
from .lanczos import modified_lanczos
from .prior import SolveTrace

__all__ = ["KrylovPosterior", "KrylovBasis", "krylov_basis", "krylov_full", "krylov_approx"]


@dataclass
class KrylovPosterior:
    """Posterior ``N(x_m, V diag(phi) V^T)`` under the Krylov prior.

    Attributes
    ----------
    mean : ndarray, shape (n,)
        The CG iterate ``x_m``.
    V : ndarray, shape (n, k)
        ``A``-orthonormal directions spanning the unexplored part of the
        Krylov space (all of it for the full posterior, the next ``k``
        directions for the approximation).
    phi : ndarray, shape (k,)
    m : int
        Number of iterations behind ``mean``.
    grade : int or None
        Dimension of the Krylov space, when it is known.
    A : SpdMatrix
    truncated : bool
        True if the Krylov space was exhausted before ``m`` steps.
    trace : SolveTrace or None
    history_V, history_phi : ndarray or None
        All directions and weights computed, including the first ``m``.
    """

    mean: np.ndarray
    V: np.ndarray
    phi: np.ndarray
    m: int
    grade: int | None
    A: object
    truncated: bool = False
    trace: SolveTrace | None = None
    history_V: np.ndarray | None = field(default=None, repr=False)
    history_phi: np.ndarray | None = field(default=None, repr=False)

    @property
    def rank(self):
        return self.V.shape[1]

    def gaussian(self):
        return Gaussian.krylov(self.mean, self.V, self.phi, self.A)

    def error_estimate(self):
        """``trace(A Gamma_m) = sum(phi)``."""
        return float(self.phi.sum())

    def truncate(self, d):
        """Keep the leading ``d`` columns."""
        d = max(0, min(int(d), self.rank))
        return replace(self, V=self.V[:, :d], phi=self.phi[:d])


@dataclass
class KrylovBasis:
    """Complete ``A``-orthonormal Krylov basis of an initial residual.

    Posteriors for every iteration count can be read off one basis.
    """

    A: object
    b: np.ndarray
    x0: np.ndarray
    V: np.ndarray
    coef: np.ndarray

    @property
    def grade(self):
        return self.V.shape[1]

    @property
    def phi(self):
        return self.coef ** 2

    def mean(self, m):
        m = min(int(m), self.grade)
        return self.x0 + self.V[:, :m] @ self.coef[:m]

    def posterior(self, m):
        m = int(m)
        k = min(m, self.grade)
        return KrylovPosterior(
            mean=self.mean(k),
            V=self.V[:, k:],
            phi=self.phi[k:],
            m=m,
            grade=self.grade,
            A=self.A,
            truncated=self.grade < m,
        )

    def solve_trace(self, m):
        k = min(int(m), self.grade)
        steps = np.cumsum(self.V[:, :k] * self.coef[:k], axis=1).T
        xs = self.x0 + np.vstack([np.zeros(self.x0.shape[0]), steps])
        res = np.linalg.norm(self.b[None, :] - (self.A @ xs.T).T, axis=1)
        return SolveTrace(xs, res, self.coef[:k].copy(), k, self.grade)


def _prepare(A, b, x0):
    A = as_spd(A)
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise DimensionError(f"rhs of shape {b.shape} vs order {A.n}")
    x0 = np.zeros(A.n) if x0 is None else np.array(x0, dtype=float)
    if x0.shape != (A.n,):
        raise DimensionError(f"x0 of shape {x0.shape} vs order {A.n}")
    return A, b, x0


def krylov_basis(A, b, x0=None, eps=1e-12):
    """Lanczos basis of the whole Krylov space of ``r0 = b - A x0``.

    Returns
    -------
    KrylovBasis
        ``V`` has ``g`` columns, ``g`` the grade of ``r0``; the
        coefficients are ``V^T r0`` so that ``phi = (V^T r0)^2``.
    """
    A, b, x0 = _prepare(A, b, x0)
    r0 = b - A @ x0
    if not np.any(r0):
        V = np.zeros((A.n, 0))
    else:
        V = modified_lanczos(A, r0, A.n, eps)
    return KrylovBasis(A, b, x0, V, V.T @ r0)


def krylov_full(A, b, x0=None, m=0, eps=1e-12):
    """Full Krylov posterior after ``m`` iterations.

    Parameters
    ----------
    A : SpdMatrix or array_like, shape (n, n)
    b : ndarray, shape (n,)
    x0 : ndarray, optional
    m : int
    eps : float, default 1e-12
        Lanczos breakdown tolerance, which fixes the grade.

    Returns
    -------
    posterior : KrylovPosterior
        ``truncated`` is set when the grade is below ``m``.
    trace : SolveTrace
    """
    basis = krylov_basis(A, b, x0, eps)
    post = basis.posterior(m)
    trace = basis.solve_trace(m)
    post.trace = trace
    return post, trace


def krylov_approx(A, b, x0=None, m=0, d=1, res_tol=1e-12, keep_history=False):
    """Rank-``d`` approximation of the Krylov posterior from CG.

    CG runs ``m`` iterations to produce the mean and then ``d`` more whose
    directions and step data give the covariance factors.

    Parameters
    ----------
    A : SpdMatrix or array_like, shape (n, n)
    b : ndarray, shape (n,)
    x0 : ndarray, optional
    m : int
    d : int
        Requested rank; clipped to ``g - m`` when the residual vanishes
        first.
    res_tol : float, default 1e-12
        A residual with ``||r_j|| <= res_tol * ||r_0||`` marks the grade.
    keep_history : bool, default False
        Also keep the directions and weights of the first ``m`` steps.

    Returns
    -------
    KrylovPosterior
    """
    A, b, x0 = _prepare(A, b, x0)
    m, d = int(m), int(d)
    if m < 0 or d < 0:
        raise ValueError("m and d must be non-negative")
    n = A.n
    x = x0.copy()
    r = b - A @ x
    w = r.copy()
    rr = float(r @ r)
    r0 = np.sqrt(rr)
    Vs, phis = [], []
    xs, res, steps = [x.copy()], [r0], []
    grade = None
    j = 0
    while j < m + d:
        if rr == 0.0 or np.sqrt(rr) <= res_tol * r0:
            grade = j
            break
        if j == n:
            grade = n
            break
        Aw = A @ w
        eta = float(w @ Aw)
        if eta <= 0:
            raise BreakdownError(f"non-positive curvature {eta:.3e}")
        gamma = rr / eta
        Vs.append(w / np.sqrt(eta))
        phis.append(gamma * rr)
        if j < m:
            x = x + gamma * w
        r = r - gamma * Aw
        rr_new = float(r @ r)
        w = r + (rr_new / rr) * w
        rr = rr_new
        j += 1
        if j <= m:
            xs.append(x.copy())
            res.append(np.sqrt(rr))
            steps.append(gamma)

    V_all = np.array(Vs).T if Vs else np.zeros((n, 0))
    phi_all = np.array(phis)
    k = min(m, V_all.shape[1])
    trace = SolveTrace(np.array(xs), np.array(res), np.array(steps), len(steps), grade)
    return KrylovPosterior(
        mean=x,
        V=V_all[:, k:],
        phi=phi_all[k:],
        m=m,
        grade=grade,
        A=A,
        truncated=grade is not None and grade < m,
        trace=trace,
        history_V=V_all if keep_history else None,
        history_phi=phi_all if keep_history else None,
    )
