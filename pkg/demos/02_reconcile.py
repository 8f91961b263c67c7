"""Make an incoherent forecast of a curve hierarchy add up again."""

import numpy as np

from curve_reconcile import OPTIMAL_METHODS, build_mapping, reconcile, summation_matrix

rng = np.random.default_rng(0)
n = 5
S = summation_matrix(n)
truth = S @ rng.uniform(1, 3, n)

# base forecasts: truth plus independent noise at every level
y_hat = truth + rng.normal(0, 0.5, truth.size)
residuals = rng.normal(0, 0.5, (80, truth.size))
history = S @ rng.uniform(1, 3, (n, 30))

print("incoherence of the base forecast:", abs(y_hat[0] - y_hat[n - 1:].sum()).round(3))
for method in ("bu", "tdfo", "tdar", "adfo", "adar", *OPTIMAL_METHODS):
    P = build_mapping(method, S, y_hat=y_hat, residuals=residuals, history=history.T)
    rec = reconcile(P, S, y_hat)
    err = np.sqrt(np.mean((rec.y_tilde - truth) ** 2))
    print(f"{method:13s} rmse {err:.3f}  total {rec.y_tilde[0]:.3f}  sum of bottoms {rec.b_tilde.sum():.3f}")
