"""Auction bid ladders, step curves, price classes and the market equilibrium.

Prices live on the 0.1 EUR/MWh grid between -500 and 3000.  Internally a
price is the integer tick ``round((price + 500) * 10)``; all sums over
volumes are done per tick so nothing is created or lost on the way.

Supply accumulates volume over ascending prices.  Demand accumulates over
descending prices but is reported ascending, with nonincreasing volume, so
both sides share one representation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCurveError,
    EmptyInputError,
    InvalidArgumentError,
    InvalidPriceError,
    NoEquilibriumError,
)
from .hierarchy import BottomSeries

PRICE_MIN = -500.0
PRICE_MAX = 3000.0
PRICE_STEP = 0.1
N_TICKS = int(round((PRICE_MAX - PRICE_MIN) / PRICE_STEP)) + 1  # 35001
SNAP_TOL = 1e-9
SIDES = ("supply", "demand")


def price_to_tick(price):
    """Grid index of a price; raises ``InvalidPriceError`` off the grid or out of range."""
    p = np.asarray(price, dtype=float)
    if not np.all(np.isfinite(p)):
        raise InvalidPriceError("prices must be finite")
    scaled = (p - PRICE_MIN) / PRICE_STEP
    ticks = np.rint(scaled)
    if np.any(np.abs(scaled - ticks) > SNAP_TOL * np.maximum(1.0, np.abs(scaled))):
        raise InvalidPriceError("price is not on the 0.1 EUR/MWh grid")
    if np.any(ticks < 0) or np.any(ticks >= N_TICKS):
        raise InvalidPriceError(f"price outside [{PRICE_MIN}, {PRICE_MAX}]")
    return ticks.astype(np.int64)


def tick_to_price(tick):
    return np.round(PRICE_MIN + np.asarray(tick) * PRICE_STEP, 1)


def _side(side):
    if side not in SIDES:
        raise InvalidArgumentError(f"side must be 'supply' or 'demand', got {side!r}")
    return side


@dataclass(frozen=True)
class BidLadder:
    """Bids of one side for one auction hour; duplicate prices are merged."""

    side: str
    prices: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        _side(self.side)
        prices = np.asarray(self.prices, dtype=float).ravel()
        volumes = np.asarray(self.volumes, dtype=float).ravel()
        if prices.shape != volumes.shape:
            raise InvalidArgumentError("prices and volumes differ in length")
        if not np.all(np.isfinite(volumes)) or np.any(volumes < 0):
            raise InvalidArgumentError("volumes must be finite and nonnegative")
        ticks = price_to_tick(prices)
        uniq, inverse = np.unique(ticks, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, volumes)
        p = tick_to_price(uniq)
        p.setflags(write=False)
        merged.setflags(write=False)
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "volumes", merged)

    @classmethod
    def from_entries(cls, side, entries):
        entries = list(entries)
        if not entries:
            return cls(side, np.empty(0), np.empty(0))
        prices, volumes = zip(*entries)
        return cls(side, prices, volumes)

    @property
    def ticks(self):
        return price_to_tick(self.prices)

    @property
    def total_volume(self):
        return float(np.sum(self.volumes))

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True)
class StepCurve:
    """Cumulative volume at each bid price, prices ascending.

    Supply: ``V(p) = sum of volumes bid at prices <= p`` (nondecreasing).
    Demand: ``V(p) = sum of volumes bid at prices >= p`` (nonincreasing).
    """

    side: str
    prices: np.ndarray
    volumes: np.ndarray

    def __post_init__(self):
        _side(self.side)
        for name in ("prices", "volumes"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def points(self):
        return list(zip(self.prices.tolist(), self.volumes.tolist()))

    def on_grid(self):
        """Cumulative volume at every one of the 35001 grid prices."""
        marginal = np.zeros(N_TICKS)
        ticks = price_to_tick(self.prices)
        # recover marginal volumes from the cumulative steps
        if self.side == "supply":
            marginal[ticks] = np.diff(self.volumes, prepend=0.0)
            return np.cumsum(marginal)
        marginal[ticks] = np.diff(self.volumes[::-1], prepend=0.0)[::-1]
        return np.cumsum(marginal[::-1])[::-1]

    def __call__(self, price):
        """Evaluate the step function at arbitrary prices in range."""
        p = np.asarray(price, dtype=float)
        if self.side == "supply":
            idx = np.searchsorted(self.prices, p, side="right") - 1
            out = np.where(idx >= 0, self.volumes[np.clip(idx, 0, None)], 0.0)
        else:
            idx = np.searchsorted(self.prices, p, side="left")
            last = self.prices.size
            out = np.where(idx < last, self.volumes[np.clip(idx, None, last - 1)], 0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class PriceClassGrid:
    """Price classes obtained by inverting a curve at equidistant volumes.

    ``boundaries`` are the inverted prices, strictly increasing.  For supply
    the classes are ``[-500, c_1], (c_1, c_2], ..., (c_{M-1}, 3000]``; for
    demand they mirror as ``[-500, c_2), ..., [c_{M-1}, c_M), [c_M, 3000]``.
    ``edges`` lists the class limits including the outer -500 and 3000.
    """

    side: str
    boundaries: np.ndarray

    def __post_init__(self):
        _side(self.side)
        b = np.asarray(self.boundaries, dtype=float)
        if b.ndim != 1 or b.size < 1:
            raise InvalidArgumentError("a price-class grid needs at least one boundary")
        if np.any(np.diff(b) <= 0):
            raise InvalidArgumentError("class boundaries must be strictly increasing")
        price_to_tick(b)
        b = tick_to_price(price_to_tick(b))
        b.setflags(write=False)
        object.__setattr__(self, "boundaries", b)

    @property
    def class_count(self):
        return self.boundaries.size

    @property
    def edges(self):
        if self.side == "supply":
            inner = self.boundaries[:-1]
        else:
            inner = self.boundaries[1:]
        return np.concatenate([[PRICE_MIN], inner, [PRICE_MAX]])

    def labels(self):
        """Class labels such as ``S-500.0`` or ``D3000.0`` keyed by the upper (supply) or lower (demand) limit."""
        prefix = "S" if self.side == "supply" else "D"
        return [f"{prefix}{p:.1f}" for p in self.boundaries]


def build_step_curve(bids):
    """Cumulate a bid ladder into a step curve (prices ascending)."""
    if len(bids) == 0:
        raise EmptyInputError("bid ladder is empty")
    if bids.side == "supply":
        cum = np.cumsum(bids.volumes)
    else:
        cum = np.cumsum(bids.volumes[::-1])[::-1]
    return StepCurve(bids.side, bids.prices, cum)


def make_price_classes(curve, M):
    """Invert ``curve`` at ``M + 1`` equidistant volumes ``v_j = v_min + j (v_max - v_min) / M``.

    Supply: boundary ``j`` is the smallest price whose cumulative volume
    reaches ``v_j``.  Demand: the largest such price.  Repeated boundaries
    collapse, so fewer than ``M`` classes may result.
    """
    if int(M) != M or M < 2:
        raise InvalidArgumentError(f"M must be an integer >= 2, got {M!r}")
    if len(curve.prices) == 0:
        raise EmptyInputError("curve is empty")
    v = curve.volumes
    v_min, v_max = float(np.min(v)), float(np.max(v))
    if v_max == v_min:
        raise DegenerateCurveError("flat curve: minimum and maximum volume coincide")
    targets = v_min + np.arange(int(M) + 1) * (v_max - v_min) / int(M)
    targets[-1] = v_max
    if curve.side == "supply":
        idx = np.searchsorted(v, targets, side="left")
    else:
        # volumes are nonincreasing: last index with v >= target
        idx = v.size - 1 - np.searchsorted(v[::-1], targets, side="left")
    # targets[0] == v_min only picks the extreme step itself
    prices = np.unique(curve.prices[idx])
    return PriceClassGrid(curve.side, prices)


def make_window_price_classes(curves, M):
    """One shared grid for several hours: invert the average of their curves.

    Use this to keep classes fixed over an estimation window; call
    :func:`make_price_classes` per curve for hour-specific grids.
    """
    curves = list(curves)
    if not curves:
        raise EmptyInputError("no curves given")
    side = curves[0].side
    if any(c.side != side for c in curves):
        raise InvalidArgumentError("all curves must be on the same side")
    mean = np.mean([c.on_grid() for c in curves], axis=0)
    if side == "supply":
        marginal = np.diff(mean, prepend=0.0)
    else:
        marginal = -np.diff(mean, append=0.0)
    ticks = np.flatnonzero(marginal != 0)
    avg = StepCurve(side, tick_to_price(ticks), mean[ticks])
    return make_price_classes(avg, M)


def bin_volumes(bids, grid):
    """Sum bid volume per price class, in aggregation order.

    Supply classes run from low to high prices, demand classes from high to
    low, so that cumulating the result traces the curve at the class
    boundaries.
    """
    if bids.side != grid.side:
        raise InvalidArgumentError("bid ladder and grid are on different sides")
    ticks = price_to_tick(bids.prices)
    bticks = price_to_tick(grid.boundaries)
    if bids.side == "supply":
        # class c holds (c_{c-1}, c_c]; the last class runs to the price cap
        cls = np.searchsorted(bticks, ticks, side="left")
        cls = np.minimum(cls, bticks.size - 1)
    else:
        # class index counted from the top: [c_M, 3000] is class 0
        cls = np.searchsorted(bticks, ticks, side="right") - 1
        cls = np.maximum(cls, 0)
        cls = bticks.size - 1 - cls
    b = np.zeros(bticks.size)
    np.add.at(b, cls, bids.volumes)
    if b.size < 2:
        raise DegenerateCurveError("need at least two price classes to form a bottom series")
    return BottomSeries(b)


def intersect(supply, demand):
    """Equilibrium price and volume where the two step curves cross.

    Both curves are traced on the price grid including their vertical
    segments.  If the curves share a segment rather than a point, the
    midpoint of that segment is returned in the coordinate that is free.
    """
    if supply.side != "supply" or demand.side != "demand":
        raise InvalidArgumentError("intersect expects (supply, demand) curves")
    if len(supply.prices) == 0 or len(demand.prices) == 0:
        raise EmptyInputError("cannot intersect an empty curve")
    s = supply.on_grid()
    d = demand.on_grid()
    scale = max(1.0, float(s.max()), float(d.max()))
    tol = 1e-9 * scale

    # vertical segment of each curve at each grid price
    s_lo = np.concatenate([[s[0]], s[:-1]])  # no curve below the price floor
    s_hi = s
    d_lo = np.concatenate([d[1:], [d[-1]]])  # no curve above the price cap
    d_hi = d
    lo = np.maximum(s_lo, d_lo)
    hi = np.minimum(s_hi, d_hi)
    # touching only at zero volume (supply entirely above demand) is no trade
    at_point = (lo <= hi + tol) & (hi > tol)
    # horizontal overlap on the open interval between grid prices g and g+1
    between = (np.abs(s[:-1] - d[1:]) <= tol) & (s[:-1] > tol)

    price_lo, price_hi = np.inf, -np.inf
    vol_lo, vol_hi = np.inf, -np.inf
    pts = np.flatnonzero(at_point)
    if pts.size:
        price_lo = min(price_lo, pts[0] * 1.0)
        price_hi = max(price_hi, pts[-1] * 1.0)
        vol_lo = min(vol_lo, float(np.min(lo[pts])))
        vol_hi = max(vol_hi, float(np.max(np.maximum(lo[pts], hi[pts]))))
    gaps = np.flatnonzero(between)
    if gaps.size:
        price_lo = min(price_lo, gaps[0] + 0.5)
        price_hi = max(price_hi, gaps[-1] + 0.5)
        vol_lo = min(vol_lo, float(np.min(s[gaps])))
        vol_hi = max(vol_hi, float(np.max(s[gaps])))
    if not np.isfinite(price_lo):
        raise NoEquilibriumError(f"supply and demand do not cross in [{PRICE_MIN}, {PRICE_MAX}]")
    tick = 0.5 * (price_lo + price_hi)
    price = float(np.round(PRICE_MIN + tick * PRICE_STEP, 2))
    return price, 0.5 * (vol_lo + vol_hi)
