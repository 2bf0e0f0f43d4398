"""Conjugate gradient method."""

from __future__ import annotations

import numpy as np

from ..errors import BreakdownError, DimensionError
from .prior import SolveTrace

__all__ = ["cg"]


def cg(A, b, x0=None, max_iters=None, res_tol=0.0, keep_directions=False):
    """Conjugate gradient iteration for ``A x = b``.

    Parameters
    ----------
    A : SpdMatrix or array_like, shape (n, n)
    b : ndarray, shape (n,)
    x0 : ndarray, optional
        Starting guess, zero by default.
    max_iters : int, optional
        Defaults to ``n``.
    res_tol : float, default 0
        Stop once ``||r_k|| <= res_tol * ||r_0||``.
    keep_directions : bool, default False
        Also return the search directions as columns of an array.

    Returns
    -------
    trace : SolveTrace
    W : ndarray, shape (n, k)
        Only if ``keep_directions``.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise DimensionError(f"matrix {A.shape} vs rhs of length {n}")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    max_iters = n if max_iters is None else int(max_iters)

    r = b - A @ x
    w = r.copy()
    rr = float(r @ r)
    r0 = np.sqrt(rr)
    xs, res, steps, dirs = [x.copy()], [r0], [], []
    for _ in range(max_iters):
        if np.sqrt(rr) <= res_tol * r0 or rr == 0.0:
            break
        Aw = A @ w
        eta = float(w @ Aw)
        if eta <= 0:
            raise BreakdownError(f"non-positive curvature {eta:.3e}")
        gamma = rr / eta
        if keep_directions:
            dirs.append(w.copy())
        x = x + gamma * w
        r = r - gamma * Aw
        rr_new = float(r @ r)
        w = r + (rr_new / rr) * w
        rr = rr_new
        xs.append(x.copy())
        res.append(np.sqrt(rr))
        steps.append(gamma)

    trace = SolveTrace(np.array(xs), np.array(res), np.array(steps), len(steps))
    if keep_directions:
        W = np.array(dirs).T if dirs else np.zeros((n, 0))
        return trace, W
    return trace
