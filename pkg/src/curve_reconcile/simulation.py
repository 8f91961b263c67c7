"""Monte-Carlo study of reconciliation methods on simulated curves.

Each replication simulates a VAR(1) of bottom values, aggregates it into the
``2n-1`` hierarchy levels, fits a zero-intercept AR(1) to every level,
forecasts one step ahead and scores every reconciliation method against the
held-out observation.

RMSE pools squared one-step errors over all levels and replications.
Per-replication results are stored by replication index and reduced in index
order, so parallel runs are bit-identical to serial ones.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CurveReconcileError,
    DegenerateSeriesError,
    InvalidArgumentError,
    InvalidDimensionError,
)
from .hierarchy import summation_matrix
from .reconcilers import METHODS, build_mapping, proportions_top_down

BURN_IN = 100
OUTLIER_THRESHOLD = 50.0
TABLE_N = (16, 64, 256)
TABLE_BOTTOM = (4, 16, 64)


@dataclass(frozen=True)
class SimConfig:
    """One cell of the simulation grid.

    ``N`` is the history length and ``n`` the number of bottom values.  With
    ``transform="square"`` the process is simulated with coefficient
    ``sqrt(phi)`` and the bottom values are squared before aggregation.
    """

    N: int = 64
    n: int = 16
    phi: float = 0.7
    error_cov: str = "identity"  # or "correlated": 0.3 I + 0.7 11'
    transform: str = "none"  # or "square"
    replications: int = 1000
    seed: int = 0
    methods: tuple = METHODS
    rho: float = 0.1

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise InvalidArgumentError(f"N must be an integer >= 3, got {self.N}")
        if int(self.n) != self.n or self.n < 2:
            raise InvalidArgumentError(f"n must be an integer >= 2, got {self.n}")
        if not abs(self.phi) < 1:
            raise InvalidArgumentError(f"|phi| must be < 1 for stationarity, got {self.phi}")
        if self.error_cov not in ("identity", "correlated"):
            raise InvalidArgumentError(f"unknown error_cov {self.error_cov!r}")
        if self.transform not in ("none", "square"):
            raise InvalidArgumentError(f"unknown transform {self.transform!r}")
        if self.transform == "square" and self.phi < 0:
            raise InvalidArgumentError("squared process needs phi >= 0")
        if int(self.replications) != self.replications or self.replications < 1:
            raise InvalidArgumentError(f"replications must be >= 1, got {self.replications}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise InvalidArgumentError(f"unknown methods: {unknown}")
        object.__setattr__(self, "methods", tuple(self.methods))

    @property
    def process_phi(self):
        return np.sqrt(self.phi) if self.transform == "square" else self.phi

    def error_covariance(self):
        if self.error_cov == "identity":
            return np.eye(self.n)
        return 0.3 * np.eye(self.n) + 0.7 * np.ones((self.n, self.n))


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    rmse_by_method: dict
    outlier_count: int
    filtered_rmse_by_method: dict
    failures: dict = field(default_factory=dict)
    per_level_rmse: dict = field(default_factory=dict)
    p_fo1: np.ndarray = field(default=None, repr=False)
    targets: np.ndarray = field(default=None, repr=False)


def _rng(seed, replication):
    # independent counter-based stream per replication
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication),))
    return np.random.Generator(np.random.Philox(ss))


def simulate_var1(config, replication_index):
    """Simulate ``N + 1`` bottom vectors ``b_t = phi b_{t-1} + eps_t``.

    A zero start is run through ``BURN_IN`` discarded steps.  The last row is
    the evaluation target.  Values are squared when ``transform="square"``.
    """
    rng = _rng(config.seed, replication_index)
    n = config.n
    steps = BURN_IN + config.N + 1
    z = rng.standard_normal((steps, n))
    if config.error_cov == "identity":
        eps = z
    else:
        eps = z @ np.linalg.cholesky(config.error_covariance()).T
    phi = config.process_phi
    b = np.empty((steps, n))
    prev = np.zeros(n)
    for t in range(steps):
        prev = phi * prev + eps[t]
        b[t] = prev
    out = b[BURN_IN:]
    if config.transform == "square":
        out = out**2
    return out


def fit_ar1(series):
    """Zero-intercept AR(1) coefficient by least squares.

    ``phi = sum_{t>=2} y_t y_{t-1} / sum_{t>=2} y_{t-1}^2``.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise InvalidDimensionError(f"need a series of length >= 2, got shape {y.shape}")
    return float(_fit_ar1_columns(y[:, None])[0])


def _fit_ar1_columns(Y):
    lag = Y[:-1]
    den = np.sum(lag * lag, axis=0)
    bad = np.flatnonzero(den == 0)
    if bad.size:
        raise DegenerateSeriesError(f"series {int(bad[0]) + 1} has zero lagged sum of squares")
    return np.sum(Y[1:] * lag, axis=0) / den


def error_metrics(actual, forecast):
    """MAE over all entries and RMSE as the mean over days of the hourly RMSE.

    Both inputs are ``D x 24`` (days by hours).
    """
    x = np.asarray(actual, dtype=float)
    xh = np.asarray(forecast, dtype=float)
    if x.shape != xh.shape or x.ndim != 2 or x.shape[0] < 1:
        raise InvalidDimensionError(f"shape mismatch: {x.shape} vs {xh.shape}")
    err = x - xh
    mae = float(np.mean(np.abs(err)))
    rmse = float(np.mean(np.sqrt(np.mean(err**2, axis=1))))
    return mae, rmse


def score_forecasts(S, y_hat, target, methods, residuals=None, history=None, rho=0.1):
    """Squared reconciled errors per level for each method.

    Returns ``(errors, failed)``: ``errors[method]`` is a vector of squared
    errors over the ``2n-1`` levels (``"base"`` included) and ``failed``
    lists methods that raised a package error or produced a non-finite
    squared error.
    """
    y_hat = np.asarray(y_hat, dtype=float)
    target = np.asarray(target, dtype=float)
    errors = {"base": (y_hat - target) ** 2}
    failed = []
    for method in methods:
        try:
            P = build_mapping(method, S, y_hat=y_hat, residuals=residuals, history=history, rho=rho)
        except CurveReconcileError:
            failed.append(method)
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            e = (S @ (P.P @ y_hat) - target) ** 2
        if not np.all(np.isfinite(e)):
            failed.append(method)
            continue
        errors[method] = e
    return errors, failed


def _replication(config, r, S):
    b = simulate_var1(config, r)
    Y = b @ S.T
    hist, target = Y[:-1], Y[-1]
    phi = _fit_ar1_columns(hist)
    y_hat = phi * hist[-1]
    resid = hist[1:] - phi * hist[:-1]
    errors, failed = score_forecasts(S, y_hat, target, config.methods, residuals=resid, history=hist, rho=config.rho)
    try:
        p1 = proportions_top_down("fo", y_hat=y_hat).values[0]
    except CurveReconcileError:
        p1 = np.inf
    return errors, failed, p1, target


def _run_chunk(args):
    config, reps = args
    S = summation_matrix(config.n)
    return [(r,) + _replication(config, r, S) for r in reps]


def _workers(workers):
    if workers is None:
        workers = int(os.environ.get("CURVE_RECONCILE_THREADS", "1") or 1)
    if workers == 0:
        workers = os.cpu_count() or 1
    return max(1, workers)


def run_experiment(config, workers=None):
    """Run all replications of ``config`` and tabulate RMSE per method.

    ``workers`` defaults to ``$CURVE_RECONCILE_THREADS`` (``0`` = all cores,
    unset = serial).  A replication where a method fails, or yields
    non-finite values, is left out of that method's RMSE and counted in
    ``failures``.  ``outlier_count`` counts replications with
    ``|p_fo,1| > 50`` (or undefined); ``filtered_rmse_by_method`` repeats
    the tabulation without them.
    """
    R = config.replications
    m = 2 * config.n - 1
    names = ("base",) + config.methods
    sq = {name: np.full((R, m), np.nan) for name in names}
    failures = {name: 0 for name in config.methods}
    p_fo1 = np.empty(R)
    targets = np.empty((R, m))

    workers = _workers(workers)
    if workers == 1:
        results = _run_chunk((config, range(R)))
    else:
        chunks = [(config, range(i, R, workers)) for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [row for part in pool.map(_run_chunk, chunks) for row in part]

    for r, errors, failed, p1, target in results:
        for name, e in errors.items():
            sq[name][r] = e
        for name in failed:
            failures[name] += 1
        p_fo1[r] = p1
        targets[r] = target

    keep = np.abs(p_fo1) <= OUTLIER_THRESHOLD

    def pooled(mat, rows=None):
        if rows is not None:
            mat = mat[rows]
        ok = ~np.isnan(mat[:, 0])
        if not ok.any():
            return None
        return float(np.sqrt(np.mean(mat[ok])))

    rmse, filtered, per_level = {}, {}, {}
    for name in names:
        v = pooled(sq[name])
        if v is None:
            continue
        rmse[name] = v
        f = pooled(sq[name], keep)
        if f is not None:
            filtered[name] = f
        ok = ~np.isnan(sq[name][:, 0])
        per_level[name] = np.sqrt(np.mean(sq[name][ok], axis=0))

    return SimResult(
        config=config,
        rmse_by_method=rmse,
        outlier_count=int(np.count_nonzero(~keep)),
        filtered_rmse_by_method=filtered,
        failures=failures,
        per_level_rmse=per_level,
        p_fo1=p_fo1,
        targets=targets,
    )


def run_grid(base_config, n_values=TABLE_BOTTOM, N_values=TABLE_N, workers=None):
    """Run ``base_config`` over every ``(n, N)`` pair; returns ``{(n, N): SimResult}``."""
    return {
        (n, N): run_experiment(replace(base_config, n=n, N=N), workers=workers)
        for n in n_values
        for N in N_values
    }


def rmse_table(results, filtered=False):
    """Rows = methods, columns = ``(n, N)`` pairs, as nested lists with a header."""
    cols = list(results)
    methods = []
    for res in results.values():
        for name in (res.filtered_rmse_by_method if filtered else res.rmse_by_method):
            if name not in methods:
                methods.append(name)
    header = ["method"] + [f"n={n};N={N}" for n, N in cols]
    rows = []
    for name in methods:
        row = [name]
        for c in cols:
            table = results[c].filtered_rmse_by_method if filtered else results[c].rmse_by_method
            row.append(table.get(name, float("nan")))
        rows.append(row)
    return header, rows
