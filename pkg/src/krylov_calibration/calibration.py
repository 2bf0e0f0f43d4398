"""Calibration tests for probabilistic linear solvers.

A solver is calibrated when the true solution looks like a draw from its
posterior. Two statistics measure this over many test problems whose
solutions are drawn from a reference distribution:

* the Z-statistic ``(x* - x_m)^T Sigma_m^+ (x* - x_m)``, which should
  follow a chi-squared law with ``rank(Sigma_m)`` degrees of freedom;
* the S-statistic ``||x* - x_m||_A^2``, whose mean should match the
  posterior trace ``trace(A Sigma_m)``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg
import scipy.special

from .errors import (
    BreakdownError,
    DimensionError,
    IllConditionedFactorsError,
    NotPSDError,
    SingularInformationError,
)
from .gaussians import DiracCov, Gaussian, KrylovCov, RandomSource, sample
from .linalg import as_spd, rank_threshold, sym_pinv_solve
from .solvers.variants import SolverVariant, default_prior, solve_checkpoints

__all__ = [
    "Label",
    "Verdict",
    "ZSampleSet",
    "SSampleSet",
    "ProblemBatch",
    "z_statistic",
    "krylov_cov_pinv_apply",
    "krylov_numerical_support",
    "chi_square_cdf",
    "chi_square_cdf_left",
    "ks_statistic",
    "s_statistic",
    "run_test_problems",
    "sample_z",
    "sample_s",
    "verdict_from_z",
    "verdict_from_s",
    "chi_sq_projector_check",
    "reference_gaussian",
    "worker_count",
]

THREADS_ENV = "KRYLOV_CALIBRATE_THREADS"

# Failures that make a single test problem unusable without invalidating
# the rest of the batch.
_RECOVERABLE = (BreakdownError, SingularInformationError, IllConditionedFactorsError,
                NotPSDError)


class Label(str, Enum):
    CALIBRATED = "Calibrated"
    PESSIMISTIC = "Pessimistic"
    OPTIMISTIC = "Optimistic"


@dataclass(frozen=True)
class Verdict:
    """Calibration label with the numbers behind it.

    Attributes
    ----------
    label : Label
    statistic : float
        KS distance for Z, relative mean mismatch for S.
    sample_mean, reference_mean : float
    standard_error : float
        Standard error of ``sample_mean``.
    """

    label: Label
    statistic: float
    sample_mean: float
    reference_mean: float
    standard_error: float = 0.0

    @property
    def lean(self):
        """Side the means point to, even when the label is Calibrated.

        ``Pessimistic`` when the sample mean is more than two standard
        errors below the reference mean, ``Optimistic`` when more than two
        above, ``Calibrated`` otherwise.
        """
        gap = self.sample_mean - self.reference_mean
        if abs(gap) <= 2.0 * self.standard_error:
            return Label.CALIBRATED
        return Label.PESSIMISTIC if gap < 0 else Label.OPTIMISTIC

    def __str__(self):
        return self.label.value


@dataclass
class ZSampleSet:
    """Z-statistic samples at one iteration count.

    Attributes
    ----------
    samples : ndarray
    dof : int
        Lower median of the numerical ranks of the posterior covariances.
    ks : float
        Kolmogorov-Smirnov distance to ``chi2(dof)``.
    m : int
    ranks : ndarray of int
    skipped : list of (int, str)
    """

    samples: np.ndarray
    dof: int
    ks: float
    m: int
    ranks: np.ndarray
    skipped: list = field(default_factory=list)

    @property
    def mean(self):
        return float(np.mean(self.samples))

    @property
    def chi2_mean(self):
        return float(self.dof)


@dataclass
class SSampleSet:
    """S-statistic samples and posterior traces at one iteration count."""

    s: np.ndarray
    t: np.ndarray
    m: int
    skipped: list = field(default_factory=list)

    @property
    def h(self):
        """Empirical mean of the S-statistic."""
        return float(np.mean(self.s))

    @property
    def trace_mean(self):
        return float(np.mean(self.t))

    @property
    def trace_std(self):
        return float(np.std(self.t, ddof=1)) if self.t.size > 1 else 0.0


def worker_count(workers=None):
    """Thread count from the argument, the environment, or the CPU count."""
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def krylov_numerical_support(V, phi):
    """Columns of ``V diag(phi) V^T`` that count towards its numerical rank.

    A column contributes ``phi_j ||v_j||^2`` to the trace. Columns whose
    contribution is at most ``n * eps`` times the largest one are at
    rounding level, the same cutoff dense covariances get through their
    eigenvalues.

    Returns
    -------
    ndarray of bool
    """
    V = np.asarray(V, dtype=float)
    phi = np.asarray(phi, dtype=float)
    size = phi * np.einsum("ij,ij->j", V, V)
    if size.size == 0:
        return size > 0
    return size > rank_threshold(V, max(size.max(), 0.0))


def krylov_cov_pinv_apply(V, phi, y, cond_limit=1e14):
    """Apply the pseudo-inverse of ``V diag(phi) V^T`` to ``y``.

    Uses ``V (V^T V)^{-1} diag(phi)^{-1} (V^T V)^{-1} V^T``, valid when
    ``V`` has full column rank. Columns outside
    :func:`krylov_numerical_support` are dropped.

    Raises
    ------
    IllConditionedFactorsError
        If ``V^T V`` has condition number above ``cond_limit``.
    """
    V = np.asarray(V, dtype=float)
    phi = np.asarray(phi, dtype=float)
    keep = krylov_numerical_support(V, phi)
    V, phi = V[:, keep], phi[keep]
    if V.shape[1] == 0:
        return np.zeros_like(np.asarray(y, dtype=float))
    G = V.T @ V
    if np.linalg.cond(G) > cond_limit:
        raise IllConditionedFactorsError("Krylov factors are nearly dependent")
    cf = scipy.linalg.cho_factor(G)
    c = scipy.linalg.cho_solve(cf, V.T @ y)
    c = c / phi if c.ndim == 1 else c / phi[:, None]
    return V @ scipy.linalg.cho_solve(cf, c)


def _z_and_rank(x_true, posterior):
    e = np.asarray(x_true, dtype=float) - posterior.mean
    cov = posterior.cov
    if isinstance(cov, DiracCov):
        return 0.0, 0
    if isinstance(cov, KrylovCov):
        keep = krylov_numerical_support(cov.V, cov.phi)
        if cov.A is not None and not keep.all():
            # columns at rounding-level weight sit outside the numerical
            # support; take the error off them in the A inner product the
            # factors are orthonormal in, so it does not leak into the rest
            Vd = cov.V[:, ~keep]
            e = e - Vd @ (Vd.T @ (cov.A @ e))
        q = krylov_cov_pinv_apply(cov.V, cov.phi, e)
        return float(e @ q), int(np.count_nonzero(keep))
    q, rank = sym_pinv_solve(cov.dense(), e)
    return float(e @ q), rank


def z_statistic(x_true, posterior):
    """``(x* - x_m)^T Sigma_m^+ (x* - x_m)`` for one test problem.

    Parameters
    ----------
    x_true : ndarray, shape (n,)
    posterior : Gaussian

    Returns
    -------
    float
    """
    if np.shape(x_true) != (posterior.n,):
        raise DimensionError(f"x* of shape {np.shape(x_true)} vs order {posterior.n}")
    return _z_and_rank(x_true, posterior)[0]


def s_statistic(x_true, posterior, A):
    """Squared energy-norm error and posterior trace.

    Returns
    -------
    s : float
        ``||x* - x_m||_A^2``.
    t : float
        ``trace(A Sigma_m)``.
    """
    e = np.asarray(x_true, dtype=float) - posterior.mean
    return float(e @ (A @ e)), posterior.cov.trace_weighted(A)


def chi_square_cdf(f, x):
    """Chi-squared CDF with ``f`` degrees of freedom, vectorized in ``x``.

    ``f = 0`` is the point mass at zero.
    """
    x = np.asarray(x, dtype=float)
    if f < 0:
        raise ValueError("degrees of freedom must be non-negative")
    if f == 0:
        return np.where(x >= 0, 1.0, 0.0)
    return np.where(x > 0, scipy.special.gammainc(0.5 * f, 0.5 * np.clip(x, 0, None)), 0.0)


def chi_square_cdf_left(f, x):
    """Left limit ``P(X < x)`` of the chi-squared CDF.

    Equal to :func:`chi_square_cdf` except for ``f = 0``, whose point mass
    at zero makes the CDF jump there.
    """
    x = np.asarray(x, dtype=float)
    if f == 0:
        return np.where(x > 0, 1.0, 0.0)
    return chi_square_cdf(f, x)


def _ks_sides(samples, cdf, cdf_left=None):
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    N = x.size
    if N == 0:
        raise ValueError("no samples")
    F = np.asarray(cdf(x), dtype=float)
    Fl = F if cdf_left is None else np.asarray(cdf_left(x), dtype=float)
    i = np.arange(1, N + 1)
    # ECDF above the reference just right of x_i, below it just left of x_i
    return float(np.max(i / N - F)), float(np.max(Fl - (i - 1) / N))


def ks_statistic(samples, cdf, cdf_left=None):
    """Kolmogorov-Smirnov distance between samples and a reference CDF.

    Parameters
    ----------
    samples : array_like
    cdf : callable
        Vectorized reference CDF.
    cdf_left : callable, optional
        Left limit of ``cdf``; needed only when the reference has atoms.

    Returns
    -------
    float
    """
    return max(_ks_sides(samples, cdf, cdf_left))


def _chi2_ks_sides(samples, dof):
    return _ks_sides(samples, lambda x: chi_square_cdf(dof, x),
                     lambda x: chi_square_cdf_left(dof, x))


def reference_gaussian(A, kind="inverse"):
    """Reference distribution for the true solutions.

    ``"inverse"`` gives ``N(0, A^{-1})`` held as a Cholesky-based factor;
    ``"identity"`` gives ``N(0, I)``.
    """
    A = as_spd(A)
    if kind == "inverse":
        L = A.cholesky_lower()
        F = scipy.linalg.solve_triangular(L, np.eye(A.n), lower=True, trans="T")
        return Gaussian.factored(np.zeros(A.n), F)
    if kind == "identity":
        return Gaussian.factored(np.zeros(A.n), np.eye(A.n))
    raise ValueError(f"unknown reference {kind!r}")


@dataclass
class ProblemBatch:
    """Statistics of a batch of test problems at several checkpoints.

    Arrays have shape ``(n_test, n_checkpoints)``; rows of skipped
    problems are NaN (``-1`` for ranks).
    """

    checkpoints: tuple
    z: np.ndarray
    s: np.ndarray
    t: np.ndarray
    rank: np.ndarray
    skipped: list
    convergence: np.ndarray
    residuals: np.ndarray

    @property
    def n_test(self):
        return self.z.shape[0]

    @property
    def ok(self):
        return ~np.isnan(self.s[:, 0])

    def zset(self, j):
        ok = self.ok
        ranks = self.rank[ok, j]
        dof = int(np.sort(ranks)[(ranks.size - 1) // 2]) if ranks.size else 0
        samples = self.z[ok, j]
        ks = max(_chi2_ks_sides(samples, dof))
        return ZSampleSet(samples, dof, ks, self.checkpoints[j], ranks, list(self.skipped))

    def sset(self, j):
        ok = self.ok
        return SSampleSet(self.s[ok, j], self.t[ok, j], self.checkpoints[j],
                          list(self.skipped))


def _one_problem(i, A, prior, reference, variant, checkpoints, seed, approx_rank,
                 eps, want_z, want_trace):
    src = RandomSource(seed, i)
    x_true = sample(reference, src.child(0))
    b = A @ x_true
    posts, trace = solve_checkpoints(variant, A, b, checkpoints, src.child(1).generator,
                                     prior, approx_rank, eps)
    row = np.full((4, len(checkpoints)), np.nan)
    for j, post in enumerate(posts):
        if want_z:
            row[0, j], row[3, j] = _z_and_rank(x_true, post)
        row[1, j], row[2, j] = s_statistic(x_true, post, A)
    conv = res = None
    if want_trace:
        errs = trace.a_norm_errors(A, x_true)
        # relative energy-norm error ||x* - x_k||_A / ||x* - x_0||_A
        conv = np.sqrt(np.clip(errs, 0, None) / errs[0]) if errs[0] > 0 else errs
        res = trace.residual_norms
    return row, conv, res


def run_test_problems(A, solver, checkpoints, n_test, seed, prior=None,
                      reference=None, approx_rank=None, eps=1e-12,
                      want_z=True, workers=None):
    """Solve ``n_test`` random problems and collect Z and S statistics.

    Problem ``i`` draws ``x*`` from ``reference`` with stream ``(seed, i)``
    and sets ``b = A x*``, so results do not depend on the worker count.

    Parameters
    ----------
    A : SpdMatrix
    solver : SolverVariant or str
    checkpoints : sequence of int
    n_test : int
    seed : int
    prior : PriorSpec, optional
    reference : Gaussian, optional
        Defaults to ``N(0, A^{-1})``.
    approx_rank : int, optional
    eps : float, default 1e-12
    want_z : bool, default True
    workers : int, optional

    Returns
    -------
    ProblemBatch
    """
    A = as_spd(A)
    variant = SolverVariant(solver)
    checkpoints = tuple(int(c) for c in checkpoints)
    if prior is None:
        prior = default_prior(variant, A.n)
    if reference is None:
        reference = reference_gaussian(A)

    def job(i):
        try:
            return _one_problem(i, A, prior, reference, variant, checkpoints, seed,
                                approx_rank, eps, want_z, i == 0)
        except _RECOVERABLE as exc:
            return exc

    nw = worker_count(workers)
    if nw == 1:
        results = [job(i) for i in range(n_test)]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(job, range(n_test)))

    C = len(checkpoints)
    z = np.full((n_test, C), np.nan)
    s = np.full((n_test, C), np.nan)
    t = np.full((n_test, C), np.nan)
    rank = np.full((n_test, C), -1, dtype=int)
    skipped = []
    conv = res = np.zeros(0)
    for i, out in enumerate(results):
        if isinstance(out, Exception):
            skipped.append((i, f"{type(out).__name__}: {out}"))
            continue
        row, c, r = out
        z[i], s[i], t[i] = row[0], row[1], row[2]
        if want_z:
            rank[i] = row[3].astype(int)
        if c is not None:
            conv, res = c, r
    return ProblemBatch(checkpoints, z, s, t, rank, skipped, conv, res)


def sample_z(A, solver, m, n_test, seed, prior=None, reference=None,
             approx_rank=None, eps=1e-12, workers=None):
    """Z-statistic samples over ``n_test`` random test problems.

    Returns
    -------
    ZSampleSet
    """
    batch = run_test_problems(A, solver, [m], n_test, seed, prior, reference,
                              approx_rank, eps, True, workers)
    return batch.zset(0)


def sample_s(A, solver, m, n_test, seed, prior=None, reference=None,
             approx_rank=None, eps=1e-12, workers=None):
    """S-statistic samples and posterior traces over random test problems.

    Returns
    -------
    SSampleSet
    """
    batch = run_test_problems(A, solver, [m], n_test, seed, prior, reference,
                              approx_rank, eps, False, workers)
    return batch.sset(0)


def _standard_error(x):
    return float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def verdict_from_z(zset, ks_cal=0.25):
    """Label Z samples against ``chi2(dof)``.

    Calibrated if the KS distance is at most ``ks_cal``; otherwise
    Pessimistic when the sample mean is below ``dof`` and Optimistic when
    above. Equal means are split by the larger one-sided KS deviation.
    """
    mean, ref = zset.mean, float(zset.dof)
    if zset.ks <= ks_cal:
        label = Label.CALIBRATED
    elif np.isclose(mean, ref, rtol=1e-9, atol=0.0):
        up, down = _chi2_ks_sides(zset.samples, zset.dof)
        label = Label.PESSIMISTIC if up >= down else Label.OPTIMISTIC
    else:
        label = Label.PESSIMISTIC if mean < ref else Label.OPTIMISTIC
    return Verdict(label, zset.ks, mean, ref, _standard_error(zset.samples))


def verdict_from_s(sset, rel_cal=0.1):
    """Label S samples by comparing their mean with the mean trace.

    Calibrated if ``|trace_mean - h| / h <= rel_cal``; otherwise
    Pessimistic when ``h`` is below the mean trace and Optimistic when
    above.
    """
    h, tm = sset.h, sset.trace_mean
    rel = abs(tm - h) / h if h > 0 else (0.0 if tm == 0 else np.inf)
    if rel <= rel_cal:
        label = Label.CALIBRATED
    else:
        label = Label.PESSIMISTIC if h < tm else Label.OPTIMISTIC
    return Verdict(label, float(rel), h, tm, _standard_error(sset.s))


@dataclass(frozen=True)
class ProjectorCheck:
    ks: float
    rank: int
    samples: np.ndarray


def chi_sq_projector_check(P, n_samples, rng, tol=1e-10):
    """Check that ``z^T P z`` is ``chi2(rank P)`` for standard normal ``z``.

    Parameters
    ----------
    P : array_like, shape (n, n)
        Orthogonal projector.
    n_samples : int
    rng : RandomSource, numpy Generator or seed
    tol : float, default 1e-10
        Tolerance on symmetry and idempotence.

    Returns
    -------
    ProjectorCheck
    """
    P = np.asarray(P, dtype=float)
    scale = max(1.0, np.linalg.norm(P))
    if (np.linalg.norm(P - P.T) > tol * scale
            or np.linalg.norm(P @ P - P) > tol * scale):
        raise ValueError("matrix is not an orthogonal projector")
    rank = int(round(np.trace(P)))
    g = Gaussian.factored(np.zeros(P.shape[0]), np.eye(P.shape[0]))
    Z = sample(g, rng, n_samples)
    q = np.einsum("ij,ij->i", Z, Z @ P)
    ks = max(_chi2_ks_sides(q, rank))
    return ProjectorCheck(ks, rank, q)
