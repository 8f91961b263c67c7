"""Auction bids to step curves, a clearing point, and price-class series."""

import numpy as np

from curve_reconcile import (
    BidLadder, aggregate_bottom, bin_volumes, build_step_curve, intersect, make_price_classes,
)

rng = np.random.default_rng(3)
supply = BidLadder("supply", np.round(rng.uniform(-50, 200, 300), 1), rng.integers(1, 60, 300).astype(float))
demand = BidLadder("demand", np.round(rng.uniform(-50, 200, 300), 1), rng.integers(1, 60, 300).astype(float))

s_curve, d_curve = build_step_curve(supply), build_step_curve(demand)
price, volume = intersect(s_curve, d_curve)
print(f"clearing price {price:.1f}, volume {volume:.1f}")

grid = make_price_classes(s_curve, 8)
bins = bin_volumes(supply, grid)
print("supply price classes:", grid.labels())
print("volume per class:", bins.values)
print("re-aggregated classes match the curve at the boundaries:",
      np.array_equal(aggregate_bottom(bins).values, s_curve(grid.boundaries)))
print("total volume preserved:", bins.values.sum() == supply.total_volume)
