"""Experiment harness: test matrices, runs and report files."""

from .matrices import (
    builtin_matrix,
    jacobi_precondition,
    load_matrix,
    read_matrix_market,
    write_matrix_market,
)
from .report import histogram_edges, write_report
from .runner import ExperimentConfig, ExperimentReport, prepare_matrix, run_experiment

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "builtin_matrix",
    "histogram_edges",
    "jacobi_precondition",
    "load_matrix",
    "prepare_matrix",
    "read_matrix_market",
    "run_experiment",
    "write_matrix_market",
    "write_report",
]
