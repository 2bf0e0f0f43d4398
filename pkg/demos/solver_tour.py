"""Calibration verdicts for the four solver variants.

Each variant solves the same 200 random test problems on a rotated
matrix of order 200. The summary lines show the Z and S verdicts at two
iteration counts.

Run with ``python demos/solver_tour.py``. Takes about 20 seconds.
"""

from krylov_calibration.experiment.runner import ExperimentConfig, run_experiment

for solver in ("random-directions", "inverse-prior", "krylov-full", "krylov-approx"):
    cfg = ExperimentConfig("gen:rand-spd:200:1e3", solver=solver, checkpoints=(10, 50),
                           n_test=200, seed=42, approx_rank=10)
    print(run_experiment(cfg).summary())
    print()
