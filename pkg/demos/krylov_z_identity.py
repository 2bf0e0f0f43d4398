"""Z-statistic of full Krylov posteriors.

For a full Krylov posterior the error always sits in the span of the
remaining Krylov directions with exactly the weights the covariance puts
there, so the Z-statistic is the same number, ``g - m``, for every test
problem. This script prints that number next to ``g - m``.

Run with ``python demos/krylov_z_identity.py``.
"""

import numpy as np

from krylov_calibration.calibration import z_statistic
from krylov_calibration.experiment.matrices import builtin_matrix
from krylov_calibration.solvers import krylov_full

A = builtin_matrix("rand-spd", 60, kappa=1e4, seed=0)
rng = np.random.default_rng(1)
print(" m   g-m        Z (three problems)")
for m in (1, 5, 20, 40):
    zs = []
    for _ in range(3):
        x = rng.standard_normal(60)
        post, _ = krylov_full(A, A @ x, m=m)
        zs.append(z_statistic(x, post.gaussian()))
    print(f"{m:2d}  {post.grade - m:3d}  " + "  ".join(f"{z:.10f}" for z in zs))
