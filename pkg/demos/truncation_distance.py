"""Energy-norm Wasserstein distance between a Krylov posterior and its truncations.

Dropping trailing Krylov directions moves the posterior by the square
root of the dropped weights. The script compares that closed form with
the general Gaussian formula evaluated on materialized covariances.

Run with ``python demos/truncation_distance.py``.
"""

import numpy as np

from krylov_calibration.experiment.matrices import builtin_matrix
from krylov_calibration.gaussians import Gaussian
from krylov_calibration.solvers import krylov_full
from krylov_calibration.wasserstein import krylov_truncation_wA, wA_gaussian

A = builtin_matrix("rand-spd", 40, kappa=1e2, seed=3)
b = np.random.default_rng(3).standard_normal(40)
post, _ = krylov_full(A, b, m=5)
full = post.gaussian()
print(" d   closed form   general formula")
for d in (0, 1, 5, 10, 20, post.rank):
    trunc = Gaussian.krylov(full.mean, post.V[:, :d], post.phi[:d], A)
    print(f"{d:2d}   {krylov_truncation_wA(post, d):.9f}   {wA_gaussian(full, trunc, A).distance:.9f}")
