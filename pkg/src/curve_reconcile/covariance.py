"""Estimators of the base-forecast error covariance ``W``.

All sample moments use the divisor ``T`` (number of residual rows) and, by
default, the raw residuals without re-centering: base forecasts are taken to
be unbiased.  Pass ``center=True`` to subtract column means first.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DivisionError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidDimensionError,
)
from .hierarchy import _check_n, _frozen

SCHEMES = ("opols", "oplambda", "opwls", "opcov", "opshrink", "opledoitwolf", "opglasso")

GLASSO_TOL = 1e-7
GLASSO_MAX_SWEEPS = 500


@dataclass(frozen=True)
class CovEstimate:
    W: np.ndarray
    scheme: str
    shrinkage: float = None
    rho: float = None

    def __post_init__(self):
        W = _frozen(self.W)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise InvalidDimensionError(f"W must be square, got {W.shape}")
        object.__setattr__(self, "W", W)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.W, dtype=dtype)


def _panel(E, min_rows, center):
    E = np.asarray(E, dtype=float)
    if E.ndim != 2:
        raise InvalidDimensionError(f"residual panel must be T x m, got shape {E.shape}")
    if E.shape[0] < min_rows:
        raise InsufficientDataError(f"need at least {min_rows} residual rows, got {E.shape[0]}")
    if not np.all(np.isfinite(E)):
        raise InvalidArgumentError("residual panel contains non-finite values")
    if center:
        E = E - E.mean(axis=0)
    return E


def _sample(E):
    W = E.T @ E / E.shape[0]
    return 0.5 * (W + W.T)


def _check_variances(var):
    bad = np.flatnonzero(var <= 0)
    if bad.size:
        raise DivisionError(f"residual column {int(bad[0]) + 1} has zero variance", index=int(bad[0]) + 1)


def w_identity(n):
    n = _check_n(n)
    return CovEstimate(np.eye(2 * n - 1), "opols")


def w_lambda(S):
    """``Diag(S 1)``: each level weighted by how many bottom values it sums."""
    S = np.asarray(S, dtype=float)
    return CovEstimate(np.diag(S.sum(axis=1)), "oplambda")


def w_sample(E, center=False):
    """Sample covariance ``E'E / T``."""
    E = _panel(E, 2, center)
    return CovEstimate(_sample(E), "opcov")


def w_diagonal(E, center=False):
    """Diagonal of the sample covariance (uncorrelated, unequal variances)."""
    E = _panel(E, 2, center)
    return CovEstimate(np.diag(np.diag(_sample(E))), "opwls")


def schafer_strimmer_lambda(E, center=False):
    """Shrinkage intensity toward the diagonal target.

    ``lambda = sum_{i!=j} Var(r_ij) / sum_{i!=j} r_ij^2`` with the variance of
    each correlation estimated from the standardized cross products
    ``w_kij = x_ki x_kj`` as ``T / (T-1)^3 * sum_k (w_kij - mean_k w_kij)^2``.
    Scales use the divisor ``T - 1`` so that ``r_ij`` equals the correlation
    implied by ``E'E / T``.  Returned unclipped.
    """
    E = _panel(E, 3, center)
    T = E.shape[0]
    ss = np.sum(E * E, axis=0)
    _check_variances(ss)
    xs = E / np.sqrt(ss / (T - 1))
    wbar = xs.T @ xs / T
    r = T / (T - 1) * wbar
    sq = xs * xs
    var_r = T / (T - 1) ** 3 * (sq.T @ sq - T * wbar**2)
    off = ~np.eye(E.shape[1], dtype=bool)
    denom = np.sum(r[off] ** 2)
    if denom == 0:
        return 1.0
    return float(np.sum(var_r[off]) / denom)


def w_shrink_schafer(E, center=False):
    """``lambda * W_dcov + (1 - lambda) * W_cov`` with ``lambda`` clipped to [0, 1]."""
    lam = float(np.clip(schafer_strimmer_lambda(E, center=center), 0.0, 1.0))
    W = _sample(_panel(E, 3, center))
    shrunk = lam * np.diag(np.diag(W)) + (1.0 - lam) * W
    return CovEstimate(shrunk, "opshrink", shrinkage=lam)


def constant_correlation_target(W):
    """Target ``f_ij = rbar * sqrt(w_ii w_jj)`` with ``rbar`` the mean off-diagonal correlation."""
    W = np.asarray(W, dtype=float)
    var = np.diag(W)
    _check_variances(var)
    sd = np.sqrt(var)
    N = W.shape[0]
    corr = W / np.outer(sd, sd)
    rbar = (np.sum(corr) - np.trace(corr)) / (N * (N - 1))
    F = rbar * np.outer(sd, sd)
    np.fill_diagonal(F, var)
    return F, rbar


def ledoit_wolf_delta(E, center=False):
    """Optimal intensity for shrinking toward constant correlation.

    ``delta = max(0, min(1, kappa / T))`` with ``kappa = (pi - rho) / gamma``:
    ``pi`` sums the asymptotic variances of the sample covariances, ``rho``
    their covariances with the target entries and ``gamma`` is the squared
    Frobenius misspecification of the target.
    """
    E = _panel(E, 2, center)
    T, N = E.shape
    s = _sample(E)
    var = np.diag(s)
    _check_variances(var)
    F, rbar = constant_correlation_target(s)
    sq = E * E
    pi_mat = sq.T @ sq / T - s * s
    pi_hat = pi_mat.sum()
    # theta[i, j] = mean_t (x_ti^2 - s_ii)(x_ti x_tj - s_ij)
    theta = (E**3).T @ E / T - var[:, None] * s
    np.fill_diagonal(theta, 0.0)
    sd = np.sqrt(var)
    rho_hat = np.trace(pi_mat) + rbar * np.sum(np.outer(1.0 / sd, sd) * theta)
    gamma_hat = np.sum((F - s) ** 2)
    if gamma_hat == 0:
        # target already equals the sample covariance; intensity is immaterial
        return 0.0
    kappa = (pi_hat - rho_hat) / gamma_hat
    return float(max(0.0, min(1.0, kappa / T)))


def w_ledoit_wolf(E, center=False):
    delta = ledoit_wolf_delta(E, center=center)
    W = _sample(_panel(E, 2, center))
    F, _ = constant_correlation_target(W)
    return CovEstimate(delta * F + (1.0 - delta) * W, "opledoitwolf", shrinkage=delta)


def _lasso_active_set(V, s, rho, beta, tol, max_iter=1000):
    """Solve ``min 0.5 b'V b - b's + rho |b|_1`` by feature-sign search.

    The active block is solved exactly and a line search over sign changes
    keeps the objective decreasing, so ill-conditioned ``V`` (nearly
    collinear residuals) costs no extra iterations.  Warm-started from
    ``beta``; returns ``(beta, V @ beta)``.
    """
    beta = np.array(beta, dtype=float)
    p = beta.size
    exact = False
    for _ in range(max_iter):
        Vb = V @ beta
        grad = Vb - s
        active = beta != 0
        signs = np.sign(beta)
        if exact or not active.any() or np.max(np.abs(grad[active] + rho * signs[active])) <= tol:
            viol = np.where(active, -np.inf, np.abs(grad) - rho)
            i = int(np.argmax(viol))
            if viol[i] <= tol:
                return beta, Vb
            signs[i] = -np.sign(grad[i])
            active[i] = True
        A = np.flatnonzero(active)
        VAA = V[A][:, A]
        rhs = s[A] - rho * signs[A]
        try:
            target_A = np.linalg.solve(VAA, rhs)
        except np.linalg.LinAlgError:
            target_A = np.linalg.lstsq(VAA, rhs, rcond=None)[0]
        step = -beta
        step[A] += target_A
        # stops: the full step and each point where a coefficient crosses zero
        flips = np.flatnonzero((beta != 0) & (np.sign(beta + step) != np.sign(beta)))
        t_flip = -beta[flips] / step[flips]
        ts = np.concatenate([[0.0, 1.0], t_flip[(t_flip > 0) & (t_flip < 1)]])
        # objective along the segment: quadratic part in closed form plus the l1 term
        Vd = V @ step
        lin = beta @ Vd - s @ step
        curv = step @ Vd
        obj = ts * lin + 0.5 * ts**2 * curv + rho * np.abs(beta + ts[:, None] * step).sum(axis=1)
        k = int(np.argmin(obj))
        if k == 0 or not obj[k] < obj[0]:
            return beta, Vb
        t = ts[k]
        new = beta + t * step
        if t < 1.0:
            new[flips[int(np.argmin(np.abs(t_flip - t)))]] = 0.0
        exact = t == 1.0 and np.array_equal(np.sign(new[A]), signs[A])
        beta = new
    return beta, V @ beta


def w_glasso(W_sample, rho, tol=GLASSO_TOL, max_sweeps=GLASSO_MAX_SWEEPS):
    """Graphical lasso covariance estimate by block coordinate descent.

    Starts from ``W = W_sample + rho I``; each sweep solves, for every
    column, the lasso ``min 0.5 |W11^{1/2} b - W11^{-1/2} s12|^2 + rho |b|_1``
    (by an active-set method) and sets ``w12 = W11 b``.  The diagonal stays at ``w_ii + rho``.
    Converged when no entry moves more than ``tol`` times the mean sample
    variance over a full sweep.
    """
    S = np.asarray(W_sample, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidDimensionError(f"W_sample must be square, got {S.shape}")
    if np.max(np.abs(S - S.T)) > 1e-10 * max(1.0, np.max(np.abs(S))):
        raise InvalidArgumentError("W_sample must be symmetric")
    if rho < 0:
        raise InvalidArgumentError(f"rho must be nonnegative, got {rho}")
    S = 0.5 * (S + S.T)
    p = S.shape[0]
    W = S + rho * np.eye(p)
    if p == 1:
        return CovEstimate(W, "opglasso", rho=float(rho))
    scale = np.mean(np.diag(S))
    atol = tol * (scale if scale > 0 else 1.0)
    idx = np.arange(p)
    betas = np.zeros((p, p - 1))
    # warm start at the unpenalized column solutions of the starting matrix
    try:
        theta = np.linalg.inv(W)
        for j in range(p):
            betas[j] = -theta[idx != j, j] / theta[j, j]
    except np.linalg.LinAlgError:
        betas[:] = 0.0
    if not np.all(np.isfinite(betas)):
        betas[:] = 0.0
    for sweep in range(1, max_sweeps + 1):
        moved = 0.0
        for j in range(p):
            rest = idx != j
            W11 = W[np.ix_(rest, rest)]
            beta, w12 = _lasso_active_set(W11, S[rest, j], rho, betas[j], atol * 0.01)
            betas[j] = beta
            moved = max(moved, np.max(np.abs(w12 - W[rest, j])))
            W[rest, j] = w12
            W[j, rest] = w12
        if moved <= atol:
            return CovEstimate(0.5 * (W + W.T), "opglasso", rho=float(rho))
    raise ConvergenceError(f"graphical lasso did not converge in {max_sweeps} sweeps", iterations=max_sweeps)


def estimate_w(scheme, S=None, residuals=None, rho=0.1, center=False):
    """Dispatch on a scheme token.  ``S`` is the canonical summation matrix."""
    if scheme == "opols":
        if S is None:
            raise InvalidArgumentError("opols needs S to size the identity")
        return CovEstimate(np.eye(np.asarray(S).shape[0]), "opols")
    if scheme == "oplambda":
        if S is None:
            raise InvalidArgumentError("oplambda needs S")
        return w_lambda(S)
    if scheme not in SCHEMES:
        raise InvalidArgumentError(f"unknown covariance scheme {scheme!r}")
    if residuals is None:
        raise InvalidArgumentError(f"{scheme} needs a residual panel")
    if scheme == "opwls":
        return w_diagonal(residuals, center=center)
    if scheme == "opcov":
        return w_sample(residuals, center=center)
    if scheme == "opshrink":
        return w_shrink_schafer(residuals, center=center)
    if scheme == "opledoitwolf":
        return w_ledoit_wolf(residuals, center=center)
    return w_glasso(w_sample(residuals, center=center).W, rho)
