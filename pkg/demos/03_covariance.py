"""The error covariances the minimum-trace reconcilers can use."""

import numpy as np

from curve_reconcile import SCHEMES, CurveReconcileError, estimate_w, summation_matrix

rng = np.random.default_rng(1)
n = 4
m = 2 * n - 1
mix = rng.standard_normal((m, m))
short = rng.standard_normal((10, m)) @ mix.T  # fewer rows than a stable sample needs
S = summation_matrix(n)

for scheme in SCHEMES:
    try:
        est = estimate_w(scheme, S=S, residuals=short, rho=0.5)
    except CurveReconcileError as exc:
        print(f"{scheme:13s} {type(exc).__name__}: {exc}")
        continue
    eig = np.linalg.eigvalsh(est.W)
    extra = f" shrinkage={est.shrinkage:.3f}" if est.shrinkage is not None else ""
    print(f"{scheme:13s} condition number {eig.max() / eig.min():10.1f}{extra}")
