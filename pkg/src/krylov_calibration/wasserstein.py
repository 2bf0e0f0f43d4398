"""2-Wasserstein distances between Gaussians.

Two metrics are provided: the usual one induced by the Euclidean norm
and the one induced by the energy norm of an SPD matrix ``A``, which
amounts to the Euclidean distance between the pushforwards under
``A^(1/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotPSDError
from .gaussians import DenseCov, DiracCov
from .linalg import as_spd, rank_threshold

__all__ = [
    "WassersteinResult",
    "w2_gaussian",
    "wA_gaussian",
    "wA_to_dirac",
    "krylov_truncation_wA",
]


@dataclass(frozen=True)
class WassersteinResult:
    """Distance with its two contributions.

    Attributes
    ----------
    distance : float
    mean_term : float
        Squared distance between the means.
    cov_term : float
        ``tr(S1) + tr(S2) - 2 tr((S1^(1/2) S2 S1^(1/2))^(1/2))``, clamped
        at zero.
    """

    distance: float
    mean_term: float
    cov_term: float

    @property
    def squared(self):
        return self.distance ** 2


def _psd_factor(S):
    """Factor ``U sqrt(lam)`` over the eigenpairs above the rank threshold.

    Eigenvalues at rounding level would otherwise contribute factor
    columns of size ``sqrt(eps ||S||)``, which pollute the cross term.
    """
    lam, U = np.linalg.eigh(0.5 * (S + S.T))
    if lam.size == 0:
        return U
    if lam[0] < -1e-8 * max(abs(lam[0]), abs(lam[-1])):
        raise NotPSDError(f"covariance has eigenvalue {lam[0]:.3e}")
    keep = lam > rank_threshold(S, np.abs(lam).max())
    return U[:, keep] * np.sqrt(lam[keep])


def _factor(g, Ah=None):
    """A factor ``F`` with ``F F^T`` the covariance of ``g`` (weighted by ``Ah``)."""
    cov = g.cov
    if isinstance(cov, DiracCov):
        return np.zeros((g.n, 0))
    if isinstance(cov, DenseCov):
        S = cov.matrix if Ah is None else Ah @ cov.matrix @ Ah
        return _psd_factor(S)
    F = cov.factor()
    return F if Ah is None else Ah @ F


def _distance(delta_sq, F1, F2, commuting):
    tr1 = float(np.sum(F1 * F1))
    tr2 = float(np.sum(F2 * F2))
    if commuting:
        S1, S2 = F1 @ F1.T, F2 @ F2.T
        lam, U = np.linalg.eigh(0.5 * (S1 + S1.T))
        d2 = np.einsum("ij,ij->j", U, S2 @ U)
        cross = float(np.sum(np.sqrt(np.clip(lam, 0, None) * np.clip(d2, 0, None))))
    elif F1.shape[1] and F2.shape[1]:
        # tr((S1^(1/2) S2 S1^(1/2))^(1/2)) is the nuclear norm of F1^T F2
        # for any factors F1 F1^T = S1 and F2 F2^T = S2
        cross = float(np.linalg.svd(F1.T @ F2, compute_uv=False).sum())
    else:
        cross = 0.0
    cov = max(tr1 + tr2 - 2.0 * cross, 0.0)
    delta_sq = max(float(delta_sq), 0.0)
    return WassersteinResult(np.sqrt(delta_sq + cov), delta_sq, cov)


def w2_gaussian(mu, nu, commuting=False):
    """Euclidean 2-Wasserstein distance between two Gaussians.

    The covariance term is evaluated from square-root factors, which
    avoids square roots of tiny eigenvalues when a covariance is rank
    deficient.

    Parameters
    ----------
    mu, nu : Gaussian
    commuting : bool, default False
        Assume the covariances share an eigenbasis and evaluate the cross
        term from diagonal entries in that basis.

    Returns
    -------
    WassersteinResult
    """
    if mu.n != nu.n:
        raise DimensionError(f"orders differ: {mu.n} vs {nu.n}")
    delta = mu.mean - nu.mean
    return _distance(delta @ delta, _factor(mu), _factor(nu), commuting)


def wA_gaussian(mu, nu, A, commuting=False):
    """2-Wasserstein distance in the energy norm of ``A``.

    Equivalent to :func:`w2_gaussian` applied to the pushforwards of
    ``mu`` and ``nu`` under ``A^(1/2)``.

    Parameters
    ----------
    mu, nu : Gaussian
    A : SpdMatrix or array_like
    commuting : bool, default False

    Returns
    -------
    WassersteinResult
    """
    A = as_spd(A)
    if mu.n != nu.n or mu.n != A.n:
        raise DimensionError(f"orders differ: {mu.n}, {nu.n}, {A.n}")
    Ah = A.sqrt()
    delta = mu.mean - nu.mean
    return _distance(delta @ (A @ delta), _factor(mu, Ah), _factor(nu, Ah), commuting)


def wA_to_dirac(mu, x, A):
    """Energy-norm 2-Wasserstein distance from ``mu`` to a point mass at ``x``.

    Returns
    -------
    WassersteinResult
        ``mean_term = ||mean - x||_A^2`` and ``cov_term = tr(A Sigma)``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (mu.n,):
        raise DimensionError(f"point of shape {x.shape} vs order {mu.n}")
    delta = mu.mean - x
    mean_term = max(float(delta @ (A @ delta)), 0.0)
    cov_term = max(mu.cov.trace_weighted(A), 0.0)
    return WassersteinResult(np.sqrt(mean_term + cov_term), mean_term, cov_term)


def krylov_truncation_wA(posterior, d):
    """Energy-norm distance between a full Krylov posterior and its rank-``d`` truncation.

    Both share a mean and their covariances differ only in the trailing
    weights, so the distance is the square root of the dropped weights.

    Parameters
    ----------
    posterior : KrylovPosterior or array_like
        The full posterior, or just its weights ``phi``.
    d : int

    Returns
    -------
    float
    """
    phi = np.asarray(getattr(posterior, "phi", posterior), dtype=float)
    d = int(d)
    if d < 0:
        raise ValueError("d must be non-negative")
    return float(np.sqrt(phi[d:].sum()))

