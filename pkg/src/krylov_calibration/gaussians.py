"""Multivariate Gaussians with several covariance representations.

A covariance is stored in whichever form the producing solver has at
hand: a dense matrix, a factor ``F`` with ``Sigma = F F^T``, Krylov
factors ``V diag(phi) V^T`` with ``A``-orthonormal ``V``, or nothing at
all for a point mass. Operations materialize a dense matrix only when
they have to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import DimensionError, NotPSDError
from .linalg import SpdMatrix, pseudo_inverse, sym_sqrt

__all__ = [
    "DenseCov",
    "FactoredCov",
    "KrylovCov",
    "DiracCov",
    "Gaussian",
    "RandomSource",
    "sample",
    "affine_push",
    "condition_on_linear",
    "quadratic_form_mean",
    "expected_sq_distance",
]


def _matmul(B, X):
    """``B @ X`` for ndarrays, sparse matrices and :class:`SpdMatrix`."""
    return B @ X


def _trace_product(B, M):
    """``trace(B @ M)`` without forming the product."""
    if isinstance(B, SpdMatrix):
        B = B.data
    if scipy.sparse.issparse(B):
        return float(scipy.sparse.csr_array(B).multiply(M.T).sum())
    return float(np.sum(np.asarray(B) * M.T))


class DenseCov:
    """Covariance held as an explicit symmetric matrix."""

    kind = "dense"

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"covariance must be square, got {matrix.shape}")
        self.matrix = matrix

    @property
    def n(self):
        return self.matrix.shape[0]

    def dense(self):
        return self.matrix

    def factor(self):
        return sym_sqrt(self.matrix)

    def matvec(self, x):
        return self.matrix @ x

    def trace_weighted(self, B):
        """``trace(B @ Sigma)``."""
        return _trace_product(B, self.matrix)


class FactoredCov:
    """Covariance ``F @ F.T`` from an ``n x l`` factor."""

    kind = "factored"

    def __init__(self, factor):
        factor = np.asarray(factor, dtype=float)
        if factor.ndim != 2:
            raise DimensionError(f"factor must be 2-d, got {factor.shape}")
        self.F = factor

    @property
    def n(self):
        return self.F.shape[0]

    def dense(self):
        return self.F @ self.F.T

    def factor(self):
        return self.F

    def matvec(self, x):
        return self.F @ (self.F.T @ x)

    def trace_weighted(self, B):
        return float(np.sum(self.F * _matmul(B, self.F)))


class KrylovCov:
    """Covariance ``V diag(phi) V^T`` with ``A``-orthonormal columns.

    Parameters
    ----------
    V : ndarray, shape (n, k)
    phi : ndarray, shape (k,)
        Non-negative weights.
    A : SpdMatrix, optional
        Matrix under which the columns of ``V`` are orthonormal. Only
        needed by :meth:`validate`.
    """

    kind = "krylov"

    def __init__(self, V, phi, A=None):
        V = np.asarray(V, dtype=float)
        phi = np.asarray(phi, dtype=float).reshape(-1)
        if V.ndim != 2 or V.shape[1] != phi.shape[0]:
            raise DimensionError(f"V {V.shape} does not match phi {phi.shape}")
        if np.any(phi < 0):
            raise NotPSDError("Krylov weights must be non-negative")
        self.V = V
        self.phi = phi
        self.A = A

    @property
    def n(self):
        return self.V.shape[0]

    @property
    def rank(self):
        return self.V.shape[1]

    def dense(self):
        return (self.V * self.phi) @ self.V.T

    def factor(self):
        return self.V * np.sqrt(self.phi)

    def matvec(self, x):
        return self.V @ (self.phi * (self.V.T @ x))

    def trace_weighted(self, B):
        if self.A is not None and B is self.A:
            # trace(A V Phi V^T) = sum(phi) when V^T A V = I
            return float(self.phi.sum())
        F = self.factor()
        return float(np.sum(F * _matmul(B, F)))

    def validate(self, tol=1e-8):
        """Check ``||V^T A V - I||_F <= tol``."""
        if self.A is None:
            raise ValueError("no matrix attached to check A-orthonormality")
        G = self.V.T @ (self.A @ self.V)
        err = np.linalg.norm(G - np.eye(self.rank))
        if err > tol:
            raise ValueError(f"columns are not A-orthonormal: {err:.2e}")
        return self


class DiracCov:
    """Zero covariance of a point mass."""

    kind = "dirac"

    def __init__(self, n):
        self._n = int(n)

    @property
    def n(self):
        return self._n

    def dense(self):
        return np.zeros((self._n, self._n))

    def factor(self):
        return np.zeros((self._n, 0))

    def matvec(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def trace_weighted(self, B):
        return 0.0


@dataclass(frozen=True)
class Gaussian:
    """Gaussian ``N(mean, cov)`` on ``R^n``."""

    mean: np.ndarray
    cov: object

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if mean.shape[0] != self.cov.n:
            raise DimensionError(
                f"mean of length {mean.shape[0]} vs covariance order {self.cov.n}")
        object.__setattr__(self, "mean", mean)

    @property
    def n(self):
        return self.mean.shape[0]

    @property
    def covariance(self):
        """Dense covariance matrix."""
        return self.cov.dense()

    @classmethod
    def dense(cls, mean, cov):
        return cls(mean, DenseCov(cov))

    @classmethod
    def factored(cls, mean, F):
        return cls(mean, FactoredCov(F))

    @classmethod
    def krylov(cls, mean, V, phi, A=None):
        return cls(mean, KrylovCov(V, phi, A))

    @classmethod
    def dirac(cls, mean):
        mean = np.asarray(mean, dtype=float).reshape(-1)
        return cls(mean, DiracCov(mean.shape[0]))


@dataclass
class RandomSource:
    """Seeded stream of pseudo-random numbers.

    The pair ``(seed, stream)`` fully determines the sequence, so
    independent streams can be handed to parallel workers and still
    reproduce bit for bit. Streams are derived with
    :class:`numpy.random.SeedSequence` spawn keys and drive a PCG64
    generator.

    Parameters
    ----------
    seed : int
    stream : int or tuple of int, default 0
    """

    seed: int
    stream: int | tuple = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        key = self.stream if isinstance(self.stream, tuple) else (self.stream,)
        ss = np.random.SeedSequence(int(self.seed), spawn_key=tuple(int(k) for k in key))
        self._rng = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self):
        return self._rng

    def standard_normal(self, size):
        return self._rng.standard_normal(size)

    def child(self, index):
        """Independent sub-stream keyed by ``index``."""
        key = self.stream if isinstance(self.stream, tuple) else (self.stream,)
        return RandomSource(self.seed, tuple(key) + (int(index),))


def _as_generator(rng):
    if isinstance(rng, RandomSource):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample(g, rng, size=None):
    """Draw ``x + F z`` with ``z`` standard normal and ``F F^T = Sigma``.

    Parameters
    ----------
    g : Gaussian
    rng : RandomSource, numpy Generator or seed
    size : int, optional
        Number of draws. If given the result has shape ``(size, n)``.

    Returns
    -------
    ndarray
    """
    gen = _as_generator(rng)
    F = g.cov.factor()
    if size is None:
        z = gen.standard_normal(F.shape[1])
        return g.mean + F @ z
    z = gen.standard_normal((size, F.shape[1]))
    return g.mean + z @ F.T


def affine_push(g, F, y):
    """Distribution of ``F x + y`` for ``x ~ g``.

    Parameters
    ----------
    g : Gaussian
    F : array_like or SpdMatrix, shape (p, n)
    y : array_like, shape (p,)

    Returns
    -------
    Gaussian
        Factored when ``g`` carries a factor, dense otherwise.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if F.shape[1] != g.n or F.shape[0] != y.shape[0]:
        raise DimensionError(f"map {F.shape} incompatible with n={g.n}, y={y.shape}")
    mean = _matmul(F, g.mean) + y
    cov = g.cov
    if isinstance(cov, DiracCov):
        return Gaussian.dirac(mean)
    if isinstance(cov, DenseCov):
        FS = _matmul(F, cov.matrix)
        M = _matmul(F, FS.T)
        return Gaussian.dense(mean, 0.5 * (M + M.T))
    return Gaussian.factored(mean, _matmul(F, cov.factor()))


def condition_on_linear(g, L, value):
    """Condition ``x ~ g`` on the noise-free observation ``L x = value``.

    Parameters
    ----------
    g : Gaussian
    L : array_like, shape (k, n)
        May have ``k = 0``, in which case ``g`` is returned unchanged.
    value : array_like, shape (k,)

    Returns
    -------
    Gaussian
        Dense posterior. A rank-deficient observation covariance
        ``L Sigma L^T`` is handled with its pseudo-inverse.
    """
    L = np.asarray(L, dtype=float)
    value = np.asarray(value, dtype=float).reshape(-1)
    if L.ndim != 2 or L.shape[1] != g.n or L.shape[0] != value.shape[0]:
        raise DimensionError(f"observation {L.shape} incompatible with n={g.n}")
    if L.shape[0] == 0:
        return g
    if isinstance(g.cov, DenseCov):
        SLt = g.cov.matrix @ L.T
        Sy = L @ SLt
        base = g.cov.matrix
    else:
        F = g.cov.factor()
        FtLt = F.T @ L.T
        SLt = F @ FtLt
        Sy = FtLt.T @ FtLt
        base = F @ F.T
    K = SLt @ pseudo_inverse(Sy)
    mean = g.mean + K @ (value - L @ g.mean)
    cov = base - K @ SLt.T
    return Gaussian.dense(mean, 0.5 * (cov + cov.T))


def quadratic_form_mean(g, B):
    """``E[x^T B x] = trace(B Sigma) + mean^T B mean`` for ``x ~ g``."""
    return g.cov.trace_weighted(B) + float(g.mean @ _matmul(B, g.mean))


def expected_sq_distance(g1, g2, B):
    """``E[(x - y)^T B (x - y)]`` for independent ``x ~ g1``, ``y ~ g2``."""
    if g1.n != g2.n:
        raise DimensionError(f"orders differ: {g1.n} vs {g2.n}")
    d = g1.mean - g2.mean
    return (g1.cov.trace_weighted(B) + g2.cov.trace_weighted(B)
            + float(d @ _matmul(B, d)))
