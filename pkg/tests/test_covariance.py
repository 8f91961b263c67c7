import numpy as np
import pytest
from hypothesis import given, strategies as st

from curve_reconcile import (
    ConvergenceError,
    DivisionError,
    InsufficientDataError,
    InvalidArgumentError,
    estimate_w,
    ledoit_wolf_delta,
    mapping_optimal,
    schafer_strimmer_lambda,
    summation_matrix,
    w_diagonal,
    w_glasso,
    w_identity,
    w_lambda,
    w_ledoit_wolf,
    w_sample,
    w_shrink_schafer,
)
from curve_reconcile.covariance import SCHEMES, constant_correlation_target

from oracles import glasso_reference, ledoit_wolf_loops, schafer_lambda_loops

E6 = np.array(
    [
        [1.0, 0.5, -0.3],
        [-0.7, 0.2, 0.4],
        [0.3, -1.1, 0.8],
        [1.2, 0.9, -0.2],
        [-0.4, -0.6, 0.1],
        [0.8, 0.3, -0.9],
    ]
)
E5 = E6[:5]

# produced by the loop oracles before the vectorized estimators were written
FROZEN_LAMBDA_5 = 0.60203217144555
FROZEN_LAMBDA_5_CENTERED = 0.33445807045963594
FROZEN_LAMBDA_6 = 0.38947722967802473
FROZEN_DELTA_6 = 0.3241864340110438

S3 = np.array([[1.0, 0.5, 0.2], [0.5, 1.2, -0.3], [0.2, -0.3, 0.9]])


def random_panel(seed, T=40, m=5):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((m, m))
    return rng.standard_normal((T, m)) @ L.T


class TestOracles:
    def test_oracles_still_reproduce_frozen_values(self):
        assert schafer_lambda_loops(E5) == pytest.approx(FROZEN_LAMBDA_5, abs=1e-14)
        assert schafer_lambda_loops(E5, center=True) == pytest.approx(FROZEN_LAMBDA_5_CENTERED, abs=1e-14)
        assert schafer_lambda_loops(E6) == pytest.approx(FROZEN_LAMBDA_6, abs=1e-14)
        assert ledoit_wolf_loops(E6) == pytest.approx(FROZEN_DELTA_6, abs=1e-14)

    def test_schafer_lambda(self):
        assert abs(schafer_strimmer_lambda(E5) - FROZEN_LAMBDA_5) <= 1e-10
        assert abs(schafer_strimmer_lambda(E5, center=True) - FROZEN_LAMBDA_5_CENTERED) <= 1e-10
        assert abs(schafer_strimmer_lambda(E6) - FROZEN_LAMBDA_6) <= 1e-10

    def test_ledoit_wolf_delta(self):
        assert abs(ledoit_wolf_delta(E6) - FROZEN_DELTA_6) <= 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_random_panels_against_oracles(self, seed):
        E = random_panel(seed, T=12, m=4)
        assert abs(schafer_strimmer_lambda(E) - schafer_lambda_loops(E)) <= 1e-10
        assert abs(ledoit_wolf_delta(E) - ledoit_wolf_loops(E)) <= 1e-10


class TestSimpleEstimators:
    def test_identity(self):
        assert np.array_equal(w_identity(2).W, np.eye(3))
        assert np.trace(w_identity(3).W) == 5
        S = summation_matrix(4)
        P = mapping_optimal(S, w_identity(4))
        assert np.allclose(P.P, np.linalg.solve(S.T @ S, S.T), atol=1e-13)

    def test_lambda(self):
        assert np.array_equal(w_lambda(summation_matrix(3)).W, np.diag([3, 2, 1, 1, 1]))
        W2 = w_lambda(summation_matrix(2)).W
        assert np.array_equal(W2, np.diag([2, 1, 1]))
        assert np.count_nonzero(W2 != np.eye(3)) == 1

    def test_sample(self):
        E = np.array([[1.0, 0], [-1, 0]])
        assert np.array_equal(w_sample(E).W, [[1, 0], [0, 0]])
        assert np.array_equal(w_diagonal(E).W, [[1, 0], [0, 0]])

    def test_zero_column(self):
        E = random_panel(1, m=3)
        E[:, 1] = 0
        W = w_sample(E).W
        assert np.all(W[1] == 0) and np.all(W[:, 1] == 0)

    def test_divisor_is_T(self):
        E = random_panel(2)
        assert np.allclose(w_sample(E).W, E.T @ E / E.shape[0], atol=1e-14)

    def test_centering_flag(self):
        E = random_panel(3) + 5
        assert np.allclose(w_sample(E, center=True).W, np.cov(E.T, bias=True), atol=1e-12)

    @given(st.integers(0, 10**6))
    def test_sample_psd(self, seed):
        E = random_panel(seed, T=6, m=5)
        assert np.linalg.eigvalsh(w_sample(E).W).min() >= -1e-10

    def test_diagonal_idempotent(self):
        W = w_diagonal(random_panel(4)).W
        assert np.count_nonzero(W - np.diag(np.diag(W))) == 0
        # feeding the square root of a diagonal W back reproduces it
        E = np.diag(np.sqrt(np.diag(W))) * np.sqrt(W.shape[0])
        assert np.allclose(w_diagonal(E).W, W, atol=1e-12)

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            w_sample(np.ones((1, 3)))


class TestShrinkage:
    def test_schafer_needs_three_rows(self):
        with pytest.raises(InsufficientDataError):
            w_shrink_schafer(E6[:2])

    def test_schafer_zero_variance(self):
        E = E6.copy()
        E[:, 2] = 0
        with pytest.raises(DivisionError) as info:
            w_shrink_schafer(E)
        assert info.value.index == 3

    def test_schafer_uncorrelated(self):
        # orthogonal columns: the sample covariance is already diagonal
        E = np.array([[1.0, 1, 1], [1, -1, 1], [1, 1, -1], [1, -1, -1]])
        est = w_shrink_schafer(E)
        assert np.allclose(est.W, np.diag(np.diag(w_sample(E).W)), atol=1e-14)

    def test_schafer_duplicated_columns(self):
        # r = 1 exactly; the variance estimate of r decays like 1/T, and so does lambda
        x = np.random.default_rng(0).standard_normal(20000)
        lams = []
        for T in (500, 5000, 20000):
            E = np.column_stack([x[:T], x[:T], x[:T]])
            est = w_shrink_schafer(E)
            lams.append(est.shrinkage)
            assert est.shrinkage < 10 / T
            assert np.max(np.abs(est.W - w_sample(E).W)) <= 10 / T
        assert lams == sorted(lams, reverse=True)

    def test_schafer_combination(self):
        est = w_shrink_schafer(E6)
        lam = est.shrinkage
        W = w_sample(E6).W
        assert 0 <= lam <= 1
        assert np.allclose(est.W, lam * np.diag(np.diag(W)) + (1 - lam) * W, atol=1e-15)

    def test_lw_target(self):
        W = w_sample(E6).W
        F, rbar = constant_correlation_target(W)
        assert np.array_equal(np.diag(F), np.diag(W))
        E2 = E6[:, :2]
        W2 = w_sample(E2).W
        _, r2 = constant_correlation_target(W2)
        assert r2 == pytest.approx(W2[0, 1] / np.sqrt(W2[0, 0] * W2[1, 1]), abs=1e-15)

    def test_lw_combination(self):
        est = w_ledoit_wolf(E6)
        W = w_sample(E6).W
        F, _ = constant_correlation_target(W)
        d = est.shrinkage
        assert np.allclose(est.W, d * F + (1 - d) * W, atol=1e-15)

    def test_lw_zero_gamma(self):
        # equal variances and identical pairwise correlations: target equals sample
        E = np.array([[1.0, 1], [1, -1], [-1, 1], [-1, -1], [2, 0], [0, 2]])
        assert ledoit_wolf_delta(E) == 0.0

    @pytest.mark.parametrize("seed", range(4))
    def test_shrink_spd(self, seed):
        E = random_panel(seed, T=4, m=7)  # fewer rows than columns
        est = w_shrink_schafer(E)
        if est.shrinkage > 0:
            assert np.linalg.eigvalsh(est.W).min() > 0


class TestGlasso:
    def test_rho_zero_recovers_sample(self):
        W = w_sample(random_panel(5, T=80, m=6)).W
        assert np.max(np.abs(w_glasso(W, 0.0).W - W)) <= 1e-6

    def test_large_rho_diagonal(self):
        W = w_sample(random_panel(6, T=80, m=6)).W
        rho = np.max(np.abs(W - np.diag(np.diag(W))))
        G = w_glasso(W, rho).W
        assert np.max(np.abs(G - np.diag(np.diag(G)))) <= 1e-7 * np.mean(np.diag(W))
        assert np.allclose(np.diag(G), np.diag(W) + rho, atol=1e-12)

    def test_reference_3x3(self):
        R = glasso_reference(S3, 0.1)
        assert np.max(np.abs(w_glasso(S3, 0.1).W - R)) <= 1e-6

    @pytest.mark.parametrize("seed", [7, 8])
    def test_reference_and_kkt(self, seed):
        S = w_sample(random_panel(seed, T=30, m=5)).W
        rho = 0.1 * np.mean(np.diag(S))
        G = w_glasso(S, rho).W
        assert np.max(np.abs(G - glasso_reference(S, rho, seed=seed))) <= 1e-6
        theta = np.linalg.inv(G)
        off = ~np.eye(5, dtype=bool)
        gap = (G - S)[off]
        t = theta[off]
        active = np.abs(t) > 1e-8 * np.max(np.abs(theta))
        # stationarity: W - S = rho * sign(Theta) on the support
        assert np.allclose(gap[active], rho * np.sign(t[active]), atol=1e-5)
        assert np.all(np.abs(gap) <= rho + 1e-6)

    def test_sparsity_monotone(self):
        W = w_sample(random_panel(9, T=60, m=6)).W
        counts = []
        for rho in (0, 0.01, 0.1, 1, 10):
            G = w_glasso(W, rho).W
            counts.append(int(np.count_nonzero(np.abs(G[~np.eye(6, dtype=bool)]) > 1e-7)))
        assert counts == sorted(counts, reverse=True)

    def test_non_convergence(self):
        W = w_sample(random_panel(10, T=60, m=6)).W
        with pytest.raises(ConvergenceError) as info:
            w_glasso(W, 0.05, tol=0.0, max_sweeps=2)
        assert info.value.iterations == 2

    def test_bad_input(self):
        with pytest.raises(InvalidArgumentError):
            w_glasso(S3, -1)
        A = S3.copy()
        A[0, 1] += 0.1
        with pytest.raises(InvalidArgumentError):
            w_glasso(A, 0.1)


class TestDispatch:
    @pytest.mark.parametrize("scheme", SCHEMES)
    def test_symmetric_and_sized(self, scheme):
        n = 3
        E = random_panel(11, T=30, m=2 * n - 1)
        est = estimate_w(scheme, S=summation_matrix(n), residuals=E)
        assert est.W.shape == (5, 5)
        assert np.max(np.abs(est.W - est.W.T)) <= 1e-12
        assert est.scheme == scheme
        assert np.all(np.diag(est.W) > 0)

    def test_residuals_required(self):
        with pytest.raises(InvalidArgumentError):
            estimate_w("opcov", S=summation_matrix(2))

    def test_unknown_scheme(self):
        with pytest.raises(InvalidArgumentError):
            estimate_w("opnope", S=summation_matrix(2), residuals=E6)
