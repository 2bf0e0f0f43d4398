"""Prior specifications for BayesCG and the solver trace record."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import DimensionError
from ..gaussians import Gaussian
from ..linalg import sym_sqrt

__all__ = ["PriorSpec", "SolveTrace"]


@dataclass(frozen=True)
class PriorSpec:
    """Prior ``N(x0, Sigma0)`` on the solution of ``A x = b``.

    Use the constructors rather than the raw fields.

    Attributes
    ----------
    kind : {"identity", "inverse", "dense", "factored", "krylov"}
    x0 : ndarray
    matrix : ndarray or None
        Dense covariance (``kind="dense"``) or factor (``kind="factored"``).
    """

    kind: str
    x0: np.ndarray
    matrix: np.ndarray | None = None

    @classmethod
    def identity(cls, x0):
        return cls("identity", np.asarray(x0, dtype=float))

    @classmethod
    def inverse(cls, x0):
        """``Sigma0 = A^{-1}``; products with it are linear solves."""
        return cls("inverse", np.asarray(x0, dtype=float))

    @classmethod
    def dense(cls, x0, cov):
        return cls("dense", np.asarray(x0, dtype=float), np.asarray(cov, dtype=float))

    @classmethod
    def factored(cls, x0, F):
        return cls("factored", np.asarray(x0, dtype=float), np.asarray(F, dtype=float))

    @classmethod
    def krylov(cls, x0):
        """Implicit prior built from the Krylov space of the residual."""
        return cls("krylov", np.asarray(x0, dtype=float))

    def check(self, A):
        n = A.shape[0]
        if self.x0.shape != (n,):
            raise DimensionError(f"x0 has shape {self.x0.shape}, expected ({n},)")
        if self.kind == "dense" and self.matrix.shape != (n, n):
            raise DimensionError(f"prior covariance {self.matrix.shape} vs n={n}")
        if self.kind == "factored" and self.matrix.shape[0] != n:
            raise DimensionError(f"prior factor {self.matrix.shape} vs n={n}")

    def apply(self, A, w):
        """``Sigma0 @ w`` for a vector or a block of columns."""
        if self.kind == "identity":
            return np.array(w, dtype=float)
        if self.kind == "inverse":
            return A.solve(w)
        if self.kind == "dense":
            return self.matrix @ w
        if self.kind == "factored":
            return self.matrix @ (self.matrix.T @ w)
        raise ValueError("the Krylov prior has no explicit covariance")

    def cov_dense(self, A):
        n = A.shape[0]
        if self.kind == "identity":
            return np.eye(n)
        if self.kind == "inverse":
            return np.array(A.inverse())
        if self.kind == "dense":
            return self.matrix.copy()
        if self.kind == "factored":
            return self.matrix @ self.matrix.T
        raise ValueError("the Krylov prior has no explicit covariance")

    def factor(self, A):
        """A factor ``F0`` with ``F0 @ F0.T = Sigma0``."""
        n = A.shape[0]
        if self.kind == "identity":
            return np.eye(n)
        if self.kind == "inverse":
            # A = L L^T  =>  A^{-1} = L^{-T} L^{-1}
            L = A.cholesky_lower()
            return scipy.linalg.solve_triangular(L, np.eye(n), lower=True, trans="T")
        if self.kind == "dense":
            return sym_sqrt(self.matrix)
        if self.kind == "factored":
            return self.matrix
        raise ValueError("the Krylov prior has no explicit covariance")

    def gaussian(self, A):
        if self.kind == "factored":
            return Gaussian.factored(self.x0, self.matrix)
        return Gaussian.dense(self.x0, self.cov_dense(A))


@dataclass
class SolveTrace:
    """Per-iteration record of a solve.

    Attributes
    ----------
    iterates : ndarray, shape (k + 1, n)
        ``x_0, ..., x_k``.
    residual_norms : ndarray, shape (k + 1,)
        Euclidean norms of the recursively updated residuals.
    step_sizes : ndarray, shape (k,)
    n_directions : int
        Number of search directions used.
    grade : int or None
        Dimension of the Krylov space when it was reached.
    directions : ndarray, shape (n, k), optional
        Search directions, when the solver keeps them.
    """

    iterates: np.ndarray
    residual_norms: np.ndarray
    step_sizes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_directions: int = 0
    grade: int | None = None
    directions: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_iterations(self):
        return self.iterates.shape[0] - 1

    def a_norm_errors(self, A, x_true):
        """Squared energy-norm errors ``||x* - x_k||_A^2`` of every iterate."""
        E = x_true[None, :] - self.iterates
        return np.einsum("ij,ij->i", E, (A @ E.T).T)
