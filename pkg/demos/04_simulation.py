"""A small Monte-Carlo comparison; top-down with forecast proportions blows up."""

from curve_reconcile import SimConfig, rmse_table, run_grid

config = SimConfig(phi=0.7, replications=200, seed=2718,
                   methods=("bu", "tdfo", "adfo", "opols", "opshrink"))
results = run_grid(config, n_values=(4, 16), N_values=(64,))

header, rows = rmse_table(results)
print("  ".join(f"{h:>10s}" for h in header))
for row in rows:
    print("  ".join([f"{row[0]:>10s}"] + [f"{v:10.3f}" for v in row[1:]]))

for cell, res in results.items():
    print(f"n={cell[0]}: {res.outlier_count} replications with a first proportion beyond 50; "
          f"tdfo without them {res.filtered_rmse_by_method['tdfo']:.3f}")
