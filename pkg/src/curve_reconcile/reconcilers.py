"""Mapping matrices ``P`` and the reconciliation ``y_tilde = S P y_hat``.

Every method produces an ``n x (2n-1)`` matrix that maps base forecasts of
all ``2n-1`` levels to reconciled bottom values.  Method tokens:

========== ==========================================================
bu         bottom-up
tdar/tdra  top-down, proportions from history (average ratio / ratio of averages)
tdfo       top-down, proportions from the forecasts themselves
adar/adra  aggregated-down, history-based proportions
adfo       aggregated-down, forecast-based proportions
op*        minimum-trace GLS with one of seven covariance schemes
========== ==========================================================
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import covariance
from .errors import (
    DivisionError,
    InvalidArgumentError,
    InvalidDimensionError,
    SingularMatrixError,
)
from .hierarchy import (
    HierarchyVector,
    _check_k,
    _check_n,
    _frozen,
    representation_matrix,
    split_hierarchy,
    summation_matrix,
)

OPTIMAL_METHODS = (
    "opols",
    "oplambda",
    "opwls",
    "opcov",
    "opshrink",
    "opledoitwolf",
    "opglasso",
)
METHODS = ("bu", "tdar", "tdra", "tdfo", "adar", "adra", "adfo") + OPTIMAL_METHODS

# symmetric-part tolerance for W before it is rejected
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class MappingMatrix:
    P: np.ndarray
    method: str

    def __post_init__(self):
        P = _frozen(self.P)
        if P.ndim != 2 or P.shape[1] != 2 * P.shape[0] - 1:
            raise InvalidDimensionError(f"mapping matrix must be n x (2n-1), got {P.shape}")
        object.__setattr__(self, "P", P)

    @property
    def n(self):
        return self.P.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.P, dtype=dtype)


@dataclass(frozen=True)
class Proportions:
    """Disaggregation proportions ``p`` (top-down) or ``q`` (aggregated-down)."""

    values: np.ndarray
    kind: str  # "top_down" | "aggregated_down"
    source: str  # "average_ratio" | "ratio_of_averages" | "forecasted"

    def __post_init__(self):
        v = _frozen(self.values)
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError("proportions must be finite")
        if self.kind == "aggregated_down" and v[0] != 1.0:
            raise InvalidArgumentError(f"aggregated-down proportions need q_1 = 1, got {v[0]}")
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class ReconciledForecast:
    y_tilde: np.ndarray
    b_tilde: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y_tilde", _frozen(self.y_tilde))
        object.__setattr__(self, "b_tilde", _frozen(self.b_tilde))


_SOURCES = {"ar": "average_ratio", "ra": "ratio_of_averages", "fo": "forecasted"}


def _source(source):
    return _SOURCES.get(source, source)


def _finite_forecast(y_hat):
    y = np.asarray(y_hat, dtype=float)
    if y.ndim != 1:
        raise InvalidDimensionError(f"forecast must be a vector, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise InvalidArgumentError("forecast contains non-finite values")
    return y


def _history(history):
    h = np.asarray(history, dtype=float)
    if h.ndim == 1:
        h = h[None, :]
    if h.ndim != 2 or h.shape[0] < 1:
        raise InvalidDimensionError(f"history must be a T x (2n-1) panel, got shape {h.shape}")
    return h


def mapping_bottom_up(n):
    """``P_bu = [O_{n x (n-1)}  I_n]``."""
    try:
        n = _check_n(n)
    except InvalidArgumentError as exc:
        raise InvalidDimensionError(str(exc)) from None
    return MappingMatrix(np.hstack([np.zeros((n, n - 1)), np.eye(n)]), "bu")


def proportions_top_down(source, y_hat=None, history=None):
    """Top-down proportions ``p``.

    ``history`` is a ``T x (2n-1)`` panel of observed hierarchy values
    (used by ``ar``/``ra``); ``y_hat`` is the base forecast (``fo``).

    The forecasted variant chains factors ``a_i / (a_i + b_{i+1})`` from the
    top down, so any near-zero ``a_{j-1} + b_j`` propagates into every
    proportion below it.  Nothing is regularized.
    """
    src = _source(source)
    if src == "forecasted":
        a, b = split_hierarchy(_finite_forecast(y_hat))
        n = b.size
        denom = a[:-1] + b[1:]  # denom[j-2] = a_{j-1} + b_j for j = 2..n
        zero = np.flatnonzero(denom == 0)
        if zero.size:
            j = int(zero[-1]) + 2
            raise DivisionError(f"zero denominator a_{j - 1} + b_{j} in forecasted top-down proportions", index=j)
        ratio = a[:-1] / denom  # a_i / (a_i + b_{i+1}), i = 1..n-1
        # tail[i-1] = prod_{l=i}^{n-1} ratio_l
        tail = np.cumprod(ratio[::-1])[::-1]
        p = np.empty(n)
        p[n - 1] = b[n - 1] / denom[n - 2]
        for j in range(2, n):
            p[j - 1] = b[j - 1] / denom[j - 2] * tail[j - 1]
        p[0] = tail[0]
        return Proportions(p, "top_down", src)

    if history is None:
        raise InvalidArgumentError(f"{src} proportions need a history panel")
    a, b = split_hierarchy(_history(history))
    top = a[:, -1]
    if src == "average_ratio":
        if np.any(top == 0):
            raise DivisionError("zero top-level value in history", index=b.shape[1])
        p = np.mean(b / top[:, None], axis=0)
    elif src == "ratio_of_averages":
        mean_top = np.mean(top)
        if mean_top == 0:
            raise DivisionError("zero mean top-level value in history", index=b.shape[1])
        p = np.mean(b, axis=0) / mean_top
    else:
        raise InvalidArgumentError(f"unknown proportion source {source!r}")
    return Proportions(p, "top_down", src)


def proportions_aggregated_down(source, y_hat=None, history=None):
    """Aggregated-down proportions ``q`` with ``q_j = b_j / a_j`` and ``q_1 = 1``.

    Each bottom value is split off the aggregate directly above it, so no
    factor is shared between levels.
    """
    src = _source(source)
    if src == "forecasted":
        a, _ = split_hierarchy(_finite_forecast(y_hat))
        zero = np.flatnonzero(a[1:] == 0)
        if zero.size:
            j = int(zero[0]) + 2
            raise DivisionError(f"zero forecast a_{j} in aggregated-down proportions", index=j)
        q = np.empty(a.size)
        q[0] = 1.0
        q[1:] = (a[1:] - a[:-1]) / a[1:]
        return Proportions(q, "aggregated_down", src)

    if history is None:
        raise InvalidArgumentError(f"{src} proportions need a history panel")
    a, b = split_hierarchy(_history(history))
    q = np.ones(b.shape[1])
    if src == "average_ratio":
        bad = np.flatnonzero(np.any(a[:, 1:] == 0, axis=0))
        if bad.size:
            raise DivisionError("zero aggregate in history", index=int(bad[0]) + 2)
        q[1:] = np.mean(b[:, 1:] / a[:, 1:], axis=0)
    elif src == "ratio_of_averages":
        mean_a = np.mean(a[:, 1:], axis=0)
        bad = np.flatnonzero(mean_a == 0)
        if bad.size:
            raise DivisionError("zero mean aggregate in history", index=int(bad[0]) + 2)
        q[1:] = np.mean(b[:, 1:], axis=0) / mean_a
    else:
        raise InvalidArgumentError(f"unknown proportion source {source!r}")
    return Proportions(q, "aggregated_down", src)


_TD_TOKENS = {"average_ratio": "tdar", "ratio_of_averages": "tdra", "forecasted": "tdfo"}
_AD_TOKENS = {"average_ratio": "adar", "ratio_of_averages": "adra", "forecasted": "adfo"}


def mapping_top_down(p):
    """``P_td = [p  O]``: every bottom value is a share of the top forecast ``a_n``."""
    if not isinstance(p, Proportions):
        p = Proportions(p, "top_down", "forecasted")
    v = p.values
    n = v.size
    P = np.zeros((n, 2 * n - 1))
    P[:, 0] = v
    return MappingMatrix(P, _TD_TOKENS.get(p.source, "tdfo"))


def mapping_aggregated_down(q):
    """``P_ad = [Q  O]`` with ``Q = Antidiag(q)``, i.e. ``b_j = q_j * a_j``."""
    if not isinstance(q, Proportions):
        q = np.asarray(q, dtype=float)
        if q.size == 0 or q[0] != 1.0:
            raise InvalidArgumentError("aggregated-down proportions need q_1 = 1")
        q = Proportions(q, "aggregated_down", "forecasted")
    v = q.values
    n = v.size
    P = np.zeros((n, 2 * n - 1))
    # row j (1-based) picks y_{n-j+1}, which holds a_j
    P[np.arange(n), n - 1 - np.arange(n)] = v
    return MappingMatrix(P, _AD_TOKENS.get(q.source, "adfo"))


def _factorize_spd(W, estimator):
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise InvalidDimensionError(f"W must be square, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise InvalidArgumentError(f"W from {estimator} contains non-finite values")
    scale = max(1.0, np.max(np.abs(W)))
    if np.max(np.abs(W - W.T)) > SYMMETRY_TOL * scale:
        raise InvalidArgumentError(f"W from {estimator} is not symmetric")
    W = 0.5 * (W + W.T)
    try:
        c, lower = linalg.cho_factor(W, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise SingularMatrixError(f"singular covariance from {estimator}: not positive definite", estimator) from None
    d = np.diag(c) ** 2
    # rank-deficient PSD input can slip through potrf with tiny pivots
    if d.min() <= W.shape[0] * np.finfo(float).eps * d.max():
        raise SingularMatrixError(f"singular covariance from {estimator}: numerically rank deficient", estimator)
    return c, lower


def mapping_optimal(S, W, method="opcov"):
    """Minimum-trace mapping ``P = (S' W^-1 S)^-1 S' W^-1``.

    ``W`` is Cholesky-factorized once; ``W^-1 S`` and the ``n x n`` Gram
    system are solved through the factors, never via an explicit inverse.
    """
    S = np.asarray(S, dtype=float)
    if hasattr(W, "W"):
        method = getattr(W, "scheme", method)
        W = W.W
    W = np.asarray(W, dtype=float)
    if S.ndim != 2 or W.shape != (S.shape[0], S.shape[0]):
        raise InvalidDimensionError(f"W shape {W.shape} does not match S shape {S.shape}")
    cw = _factorize_spd(W, method)
    WiS = linalg.cho_solve(cw, S, check_finite=False)
    G = S.T @ WiS
    G = 0.5 * (G + G.T)
    try:
        cg = linalg.cho_factor(G, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise SingularMatrixError(f"S' W^-1 S is singular for {method}", method) from None
    P = linalg.cho_solve(cg, WiS.T, check_finite=False)
    return MappingMatrix(P, method)


def reconcile(P, S, y_hat):
    """Apply ``b_tilde = P y_hat`` and ``y_tilde = S b_tilde``."""
    Pm = P.P if isinstance(P, MappingMatrix) else np.asarray(P, dtype=float)
    S = np.asarray(S, dtype=float)
    y = _finite_forecast(y_hat)
    if Pm.shape[1] != y.size or S.shape != (y.size, Pm.shape[0]):
        raise InvalidDimensionError(
            f"dimension mismatch: P {Pm.shape}, S {S.shape}, y_hat {y.shape}"
        )
    b = Pm @ y
    return ReconciledForecast(S @ b, b)


def reconcile_in_representation(y_hat_k, k, W_k, method="opcov"):
    """Minimum-trace reconciliation carried out in representation ``k``.

    ``y_hat_k`` is the base forecast laid out as ``y_[k]`` and ``W_k`` the
    error covariance in that layout.  Returns ``(y_tilde_k, canonical)``
    where ``canonical = B_[k] y_tilde_k`` is the same forecast in the
    canonical layout.  If ``W_k = B_[k]' W B_[k]`` this equals the
    canonical reconciliation with ``W``, whatever ``k`` is.
    """
    y = _finite_forecast(y_hat_k.values if isinstance(y_hat_k, HierarchyVector) else y_hat_k)
    if y.size < 3 or y.size % 2 == 0:
        raise InvalidDimensionError(f"hierarchy length must be odd and >= 3, got {y.size}")
    n = (y.size + 1) // 2
    k = _check_k(n, k)
    S_k = summation_matrix(n, k)
    P_k = mapping_optimal(S_k, W_k, method)
    rec = reconcile(P_k, S_k, y)
    B_k = representation_matrix(n, k)
    return rec, B_k @ rec.y_tilde


def build_mapping(method, S, y_hat=None, residuals=None, history=None, rho=0.1, center=False):
    """Build the mapping matrix for any method token.

    ``residuals`` (``T x (2n-1)``) feed the covariance-based ``op*``
    methods; ``history`` (observed hierarchy values) feeds ``tdar``,
    ``tdra``, ``adar`` and ``adra``.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[1]
    if method == "bu":
        return mapping_bottom_up(n)
    if method in ("tdar", "tdra", "tdfo"):
        return mapping_top_down(proportions_top_down(method[2:], y_hat=y_hat, history=history))
    if method in ("adar", "adra", "adfo"):
        return mapping_aggregated_down(proportions_aggregated_down(method[2:], y_hat=y_hat, history=history))
    if method in OPTIMAL_METHODS:
        est = covariance.estimate_w(method, S=S, residuals=residuals, rho=rho, center=center)
        return mapping_optimal(S, est.W, method)
    raise InvalidArgumentError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
