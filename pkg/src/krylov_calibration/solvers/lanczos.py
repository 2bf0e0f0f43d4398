"""Lanczos process orthonormal in the energy inner product."""

from __future__ import annotations

import numpy as np

from ..errors import BreakdownError

__all__ = ["modified_lanczos"]


def _operator(A):
    if callable(A) and not hasattr(A, "shape"):
        return A
    return lambda x: A @ x


def modified_lanczos(A, v1, m, eps=1e-12, reorth=2):
    """Build an ``A``-orthonormal basis of ``K_m(A, v1)``.

    Classical Gram-Schmidt reorthogonalization is applied ``reorth``
    times per step.

    Parameters
    ----------
    A : SpdMatrix, array_like or callable
        The matrix, or a function returning ``A @ x``. It defines both
        the Krylov space and the inner product.
    v1 : ndarray, shape (n,)
        Starting vector.
    m : int
        Maximum number of basis vectors.
    eps : float, default 1e-12
        The process stops early once the next vector would have energy
        norm below ``eps``; the number of columns is then the grade of
        ``v1`` with respect to ``A``.
    reorth : int, default 2

    Returns
    -------
    V : ndarray, shape (n, k)
        ``V.T @ A @ V = I`` with ``k <= m``.
    """
    op = _operator(A)
    v = np.array(v1, dtype=float)
    n = v.shape[0]
    m = min(int(m), n)
    V = np.zeros((n, m))
    AV = np.zeros((n, m))
    if m == 0:
        return V

    Av = op(v)
    beta = float(v @ Av)
    if not beta > 0:
        raise BreakdownError(f"starting vector has energy {beta:.3e}")
    beta = np.sqrt(beta)
    V[:, 0] = v / beta
    AV[:, 0] = Av / beta

    k = 1
    while k < m:
        # AV[:, k-1] is A v_k, so the candidate is A v_k - beta v_{k-1}
        w = AV[:, k - 1].copy()
        if k > 1:
            w -= beta * V[:, k - 2]
        alpha = float(w @ AV[:, k - 1])
        w -= alpha * V[:, k - 1]
        for _ in range(reorth):
            w -= V[:, :k] @ (AV[:, :k].T @ w)
        Aw = op(w)
        beta = float(w @ Aw)
        beta = np.sqrt(beta) if beta > 0 else 0.0
        if beta < eps:
            break
        V[:, k] = w / beta
        AV[:, k] = Aw / beta
        k += 1
    return V[:, :k]
