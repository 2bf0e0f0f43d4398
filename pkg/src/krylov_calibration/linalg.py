"""Dense and sparse linear algebra kernels.

Everything here works on symmetric matrices of moderate order. Dense
spectral routines (square roots, pseudo-inverses) are limited to order
``MAX_DENSE_ORDER``; matrix-vector products work for any size.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import DimensionError, NotPSDError, NotSymmetricError

MAX_DENSE_ORDER = 2048

__all__ = [
    "MAX_DENSE_ORDER",
    "SpdMatrix",
    "as_spd",
    "a_norm",
    "sym_sqrt",
    "pseudo_inverse",
    "numerical_rank",
    "rank_threshold",
    "min_norm_solve",
    "sym_pinv_solve",
]


class SpdMatrix:
    """Symmetric positive definite matrix with cached factorizations.

    Parameters
    ----------
    data : array_like or scipy.sparse matrix
        Square matrix. Symmetry is checked exactly as stored.
    symmetrize : bool, default False
        Replace ``data`` by ``(data + data.T) / 2`` instead of rejecting
        small asymmetries, e.g. from ``Q @ diag @ Q.T`` products.

    Notes
    -----
    Positive definiteness is not verified on construction; the first
    Cholesky factorization raises :class:`NotPSDError` if it fails, and
    :meth:`validate` checks the smallest eigenvalue explicitly.
    """

    def __init__(self, data, symmetrize=False):
        if isinstance(data, SpdMatrix):
            data = data.data
        if scipy.sparse.issparse(data):
            mat = scipy.sparse.csr_array(data, dtype=float)
            if mat.shape[0] != mat.shape[1]:
                raise DimensionError(f"matrix is not square: {mat.shape}")
            if symmetrize:
                mat = scipy.sparse.csr_array((mat + mat.T) * 0.5)
            elif (mat != mat.T).nnz:
                raise NotSymmetricError("sparse matrix is not symmetric")
            mat.sort_indices()
        else:
            mat = np.array(data, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise DimensionError(f"matrix is not square: {mat.shape}")
            if symmetrize:
                mat = 0.5 * (mat + mat.T)
            elif not np.array_equal(mat, mat.T):
                raise NotSymmetricError("matrix is not symmetric")
            mat.setflags(write=False)
        self.data = mat

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    @property
    def is_sparse(self):
        return scipy.sparse.issparse(self.data)

    def __matmul__(self, x):
        return self.data @ x

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.dense(), dtype=dtype)

    def matvec(self, x):
        return self.data @ x

    def dense(self):
        """Dense copy of the matrix (read-only, cached)."""
        return self._dense

    @cached_property
    def _dense(self):
        if self.is_sparse:
            out = self.data.toarray()
            out.setflags(write=False)
            return out
        return self.data

    @cached_property
    def _cholesky(self):
        try:
            return scipy.linalg.cho_factor(self.dense(), lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPSDError("matrix is not positive definite") from exc

    def solve(self, y):
        """Solve ``A x = y`` with a cached Cholesky factorization."""
        return scipy.linalg.cho_solve(self._cholesky, y)

    def cholesky_lower(self):
        """Lower Cholesky factor ``L`` with ``A = L @ L.T``."""
        c, _ = self._cholesky
        return np.tril(c)

    @cached_property
    def _inverse(self):
        inv = self.solve(np.eye(self.n))
        inv = 0.5 * (inv + inv.T)
        inv.setflags(write=False)
        return inv

    def inverse(self):
        """Dense inverse (cached). Order is limited to ``MAX_DENSE_ORDER``."""
        _check_dense_order(self.n)
        return self._inverse

    @cached_property
    def _eigh(self):
        _check_dense_order(self.n)
        return np.linalg.eigh(self.dense())

    def eigh(self):
        """Cached eigenvalues (ascending) and eigenvectors."""
        return self._eigh

    def sqrt(self):
        """Symmetric square root ``A^(1/2)`` (cached)."""
        return self._sqrt

    @cached_property
    def _sqrt(self):
        lam, vec = self.eigh()
        if lam[0] <= 0:
            raise NotPSDError(f"smallest eigenvalue {lam[0]:.3e} is not positive")
        out = (vec * np.sqrt(lam)) @ vec.T
        out = 0.5 * (out + out.T)
        out.setflags(write=False)
        return out

    def inv_sqrt(self):
        """Symmetric inverse square root ``A^(-1/2)`` (cached)."""
        return self._inv_sqrt

    @cached_property
    def _inv_sqrt(self):
        lam, vec = self.eigh()
        if lam[0] <= 0:
            raise NotPSDError(f"smallest eigenvalue {lam[0]:.3e} is not positive")
        out = (vec / np.sqrt(lam)) @ vec.T
        out = 0.5 * (out + out.T)
        out.setflags(write=False)
        return out

    def norm2(self):
        """Spectral norm."""
        if self.n <= MAX_DENSE_ORDER:
            return float(self.eigh()[0][-1])
        return float(scipy.sparse.linalg.eigsh(self.data, k=1, which="LA")[0][0])

    def validate(self):
        """Raise :class:`NotPSDError` unless the matrix is positive definite."""
        lam = self.eigh()[0]
        if lam[0] <= 0:
            raise NotPSDError(f"smallest eigenvalue {lam[0]:.3e} is not positive")
        return self

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"SpdMatrix(n={self.n}, {kind})"


def as_spd(A):
    """Wrap ``A`` as :class:`SpdMatrix` unless it already is one."""
    if isinstance(A, SpdMatrix):
        return A
    return SpdMatrix(A)


def _check_dense_order(n):
    if n > MAX_DENSE_ORDER:
        raise DimensionError(
            f"order {n} exceeds the dense limit {MAX_DENSE_ORDER}")


def _as_square(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {S.shape}")
    _check_dense_order(S.shape[0])
    return S


def a_norm(x, A):
    """Energy norm ``sqrt(x^T A x)``.

    Parameters
    ----------
    x : ndarray, shape (n,)
    A : SpdMatrix or array_like, shape (n, n)

    Returns
    -------
    float
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.shape[0]:
        raise DimensionError(f"vector of length {x.shape} vs matrix {A.shape}")
    val = float(x @ (A @ x))
    return np.sqrt(max(val, 0.0))


def sym_sqrt(S, tol=None):
    """Principal square root of a symmetric positive semi-definite matrix.

    Eigenvalues in ``[-tol, 0)`` are clamped to zero; anything more
    negative raises :class:`NotPSDError`.

    Parameters
    ----------
    S : array_like, shape (n, n)
    tol : float, optional
        Negative-eigenvalue tolerance. Defaults to ``1e-8 * ||S||_2``.

    Returns
    -------
    R : ndarray, shape (n, n)
        Symmetric with ``R @ R ~= S``.
    """
    S = _as_square(S)
    if S.shape[0] == 0:
        return S.copy()
    lam, vec = np.linalg.eigh(0.5 * (S + S.T))
    scale = max(abs(lam[0]), abs(lam[-1]))
    if tol is None:
        tol = 1e-8 * scale
    if lam[0] < -tol:
        raise NotPSDError(f"eigenvalue {lam[0]:.3e} below -{tol:.3e}")
    lam = np.clip(lam, 0.0, None)
    R = (vec * np.sqrt(lam)) @ vec.T
    return 0.5 * (R + R.T)


def rank_threshold(S, sv_max=None):
    """Singular-value cutoff ``n * eps * ||S||_2`` used for rank decisions."""
    n = max(np.shape(S))
    if sv_max is None:
        sv_max = np.linalg.norm(S, 2) if n else 0.0
    return n * np.finfo(float).eps * sv_max


def numerical_rank(S):
    """Number of singular values above ``n * eps * ||S||_2``.

    Parameters
    ----------
    S : array_like, shape (p, q)

    Returns
    -------
    int
    """
    S = np.asarray(S, dtype=float)
    if S.size == 0:
        return 0
    sv = np.linalg.svd(S, compute_uv=False)
    return int(np.count_nonzero(sv > rank_threshold(S, sv[0])))


def _sym_eig_filtered(S):
    """Eigenpairs of symmetric ``S`` with the rank mask applied.

    For a symmetric matrix the singular values are the absolute
    eigenvalues, so a symmetric eigensolver gives the same rank decision
    and pseudo-inverse as an SVD at a fraction of the cost.
    """
    lam, vec = np.linalg.eigh(0.5 * (S + S.T))
    absl = np.abs(lam)
    smax = absl.max() if absl.size else 0.0
    keep = absl > rank_threshold(S, smax)
    return lam, vec, keep


def pseudo_inverse(S):
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Parameters
    ----------
    S : array_like, shape (n, n)

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric, with singular values below the rank threshold treated
        as zero.
    """
    S = _as_square(S)
    if S.shape[0] == 0:
        return S.copy()
    lam, vec, keep = _sym_eig_filtered(S)
    U = vec[:, keep]
    out = (U / lam[keep]) @ U.T
    return 0.5 * (out + out.T)


def sym_pinv_solve(S, y):
    """Return ``(S^+ y, rank)`` from one symmetric eigendecomposition."""
    S = _as_square(S)
    y = np.asarray(y, dtype=float)
    if y.shape[0] != S.shape[0]:
        raise DimensionError(f"rhs of length {y.shape[0]} vs order {S.shape[0]}")
    if S.shape[0] == 0:
        return y.copy(), 0
    lam, vec, keep = _sym_eig_filtered(S)
    U = vec[:, keep]
    coef = (U.T @ y) / (lam[keep] if y.ndim == 1 else lam[keep][:, None])
    return U @ coef, int(keep.sum())


def min_norm_solve(S, y):
    """Minimum-norm least-squares solution ``S^+ y`` for symmetric ``S``.

    Parameters
    ----------
    S : array_like, shape (n, n)
    y : array_like, shape (n,) or (n, k)

    Returns
    -------
    ndarray
        Orthogonal to the numerical null space of ``S``.
    """
    return sym_pinv_solve(S, y)[0]
