"""A cumulative curve, its increments, and the other ways to cut it."""

import numpy as np

from curve_reconcile import build_hierarchy_vector, disaggregate, structure_matrices

a = [1, 4, 6, 7, 10, 15]
print("curve a:", a)

for k in (1, 3, 6):
    print(f"increments anchored at point {k}:", disaggregate(a, k).values)

y = build_hierarchy_vector(a)
print("stacked hierarchy y (aggregates reversed, then increments):", y.values)

m = structure_matrices(6, 3)
print("S @ b reproduces y:", np.array_equal(m.S @ disaggregate(a).values, y.values))
print("S == B_k S_k A_k D^-1:", np.allclose(m.S, m.B_k @ m.S_k @ m.A_k @ m.D_inv))
