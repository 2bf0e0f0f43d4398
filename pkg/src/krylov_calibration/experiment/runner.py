"""Calibration experiment: configuration, execution and report."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..calibration import (
    Label,
    SSampleSet,
    Verdict,
    ZSampleSet,
    run_test_problems,
    verdict_from_s,
    verdict_from_z,
)
from ..errors import ConfigError, SkipBudgetExceeded
from ..solvers.variants import SolverVariant
from .matrices import jacobi_precondition, load_matrix

__all__ = ["ExperimentConfig", "ExperimentReport", "run_experiment", "SKIP_BUDGET"]

SKIP_BUDGET = 0.10


@dataclass
class ExperimentConfig:
    """Settings of one calibration experiment.

    Attributes
    ----------
    matrix : str
        MatrixMarket path or ``"gen:<name>:<n>[:<kappa>[:<seed>]]"``.
    solver : str
        One of ``random-directions``, ``inverse-prior``, ``krylov-full``,
        ``krylov-approx``.
    checkpoints : tuple of int
    n_test : int
    seed : int
    approx_rank : int
        Rank of the approximate Krylov posterior.
    eps : float
        Lanczos breakdown tolerance.
    jacobi : bool or None
        Apply symmetric Jacobi scaling. ``None`` scales files and leaves
        generated matrices alone.
    out_dir : str or None
    svg : bool
    workers : int or None
    """

    matrix: str
    solver: str = "krylov-full"
    checkpoints: tuple = (10, 100, 300)
    n_test: int = 100
    seed: int = 42
    approx_rank: int = 50
    eps: float = 1e-12
    jacobi: bool | None = None
    out_dir: str | None = None
    svg: bool = False
    workers: int | None = None

    def validate(self, n=None):
        try:
            SolverVariant(self.solver)
        except ValueError as exc:
            choices = ", ".join(v.value for v in SolverVariant)
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {choices}") from exc
        cps = tuple(int(c) for c in self.checkpoints)
        if not cps or min(cps) < 1:
            raise ConfigError("checkpoints must be positive integers")
        if list(cps) != sorted(set(cps)):
            raise ConfigError("checkpoints must be strictly increasing")
        if n is not None and max(cps) > n:
            raise ConfigError(f"checkpoint {max(cps)} exceeds the matrix order {n}")
        if self.n_test < 1:
            raise ConfigError("n_test must be at least 1")
        if self.solver == SolverVariant.KRYLOV_APPROX.value and self.approx_rank < 1:
            raise ConfigError("approx_rank must be at least 1")
        if not self.eps > 0:
            raise ConfigError("eps must be positive")
        self.checkpoints = cps
        return self


@dataclass
class ExperimentReport:
    """Results of :func:`run_experiment`, one entry per checkpoint."""

    config: ExperimentConfig
    n: int
    z_sets: list
    s_sets: list
    z_verdicts: list
    s_verdicts: list
    skipped: list
    convergence: np.ndarray
    residuals: np.ndarray
    timings: dict = field(default_factory=dict)

    def rows(self):
        """Table rows ``(m, z_mean, chi2_mean, ks, s_mean, trace_mean, trace_std)``."""
        for zs, ss in zip(self.z_sets, self.s_sets):
            yield (zs.m, zs.mean, zs.chi2_mean, zs.ks, ss.h, ss.trace_mean, ss.trace_std)

    def summary(self):
        lines = [f"{self.config.solver} on {self.config.matrix} (n={self.n}, "
                 f"{self.config.n_test} problems, {len(self.skipped)} skipped)"]
        for (m, zm, cm, ks, sm, tm, ts), zv, sv in zip(self.rows(), self.z_verdicts,
                                                        self.s_verdicts):
            lines.append(f"  m={m:<5d} Z {zm:.3g} vs {cm:.3g} KS {ks:.3f} -> {zv}; "
                         f"S {sm:.3g} vs trace {tm:.3g} (sd {ts:.3g}) -> {sv}"
                         + (f" (leans {sv.lean.value})"
                            if sv.label is Label.CALIBRATED and sv.lean is not Label.CALIBRATED
                            else ""))
        return "\n".join(lines)


def prepare_matrix(config):
    """Load the configured matrix and apply Jacobi scaling if requested."""
    A = load_matrix(config.matrix)
    jacobi = config.jacobi
    if jacobi is None:
        jacobi = not str(config.matrix).startswith("gen:")
    if jacobi:
        A = jacobi_precondition(A)
    return A


def run_experiment(config, A=None, reference=None):
    """Run the Z and S calibration tests on shared test problems.

    Parameters
    ----------
    config : ExperimentConfig
    A : SpdMatrix, optional
        Use this matrix instead of loading ``config.matrix``.
    reference : Gaussian, optional
        Distribution of the true solutions; defaults to ``N(0, A^{-1})``.

    Returns
    -------
    ExperimentReport

    Raises
    ------
    ConfigError
    SkipBudgetExceeded
        If more than 10% of the test problems broke down. The partial
        report is attached as ``exc.report``.
    """
    t0 = time.perf_counter()
    config.validate()
    if A is None:
        A = prepare_matrix(config)
    config.validate(A.n)
    t1 = time.perf_counter()

    batch = run_test_problems(
        A, config.solver, config.checkpoints, config.n_test, config.seed,
        reference=reference, approx_rank=config.approx_rank, eps=config.eps, want_z=True,
        workers=config.workers)
    t2 = time.perf_counter()

    z_sets: list[ZSampleSet] = []
    s_sets: list[SSampleSet] = []
    zv: list[Verdict] = []
    sv: list[Verdict] = []
    if batch.ok.any():
        for j in range(len(config.checkpoints)):
            z_sets.append(batch.zset(j))
            s_sets.append(batch.sset(j))
            zv.append(verdict_from_z(z_sets[-1]))
            sv.append(verdict_from_s(s_sets[-1]))
    report = ExperimentReport(
        config, A.n, z_sets, s_sets, zv, sv, batch.skipped, batch.convergence,
        batch.residuals, {"load": t1 - t0, "solve": t2 - t1})
    if len(batch.skipped) > SKIP_BUDGET * config.n_test:
        exc = SkipBudgetExceeded(
            f"{len(batch.skipped)} of {config.n_test} test problems broke down")
        exc.report = report
        raise exc
    return report


def default_out_dir(config):
    return Path(config.out_dir or f"results-{config.solver}")
