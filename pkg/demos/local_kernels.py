"""Local quadratic kernels.

Near an uninformative structure, mutual information behaves like half the
Fisher information metric.  A kernel that ignores the prior cannot be the
Hessian of any potential once there are three states.
"""

import numpy as np

from infocost import (
    estimate_kernel,
    fisher_kernel,
    hessian_integrability_check,
    mutual_information,
    prior_independent_kernel,
)

mi = mutual_information()
for mu in ([0.5, 0.5], [0.2, 0.8], [0.2, 0.3, 0.5]):
    est = estimate_kernel(mi, mu)
    half_fisher = 0.5 * fisher_kernel(mu)[1]
    print(f"mu = {mu}")
    print(f"  estimated   {est.projected_matrix.round(6).tolist()}")
    print(f"  half Fisher {half_fisher.round(6).tolist()}")
    print(f"  extrapolation error bound {est.error_bound:.1e}")

Q = [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]
mu = [0.2, 0.3, 0.5]
bad = hessian_integrability_check(prior_independent_kernel(Q), [mu])
good = hessian_integrability_check(lambda m: fisher_kernel(m)[0], [mu])
print(f"\nthird-derivative asymmetry: prior-independent {bad.residual:.3g}, Fisher {good.residual:.1e}")
