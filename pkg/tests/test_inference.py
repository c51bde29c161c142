import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as scipy_stats

from launchpulse.inference import (
    betainc_reg,
    coef_table,
    fit_with_hc1,
    hc1_covariance,
    ols_fit,
    t_two_sided_p,
)


def oracle_ols(X, y):
    """Independent check: plain normal equations."""
    XtX = X.T @ X
    beta = np.linalg.solve(XtX, X.T @ y)
    return beta, y - X @ beta


def oracle_hc1(X, e):
    """Independent check: literal sandwich formula, element by element."""
    n, k = X.shape
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((k, k))
    for i in range(n):
        xi = X[i].reshape(-1, 1)
        meat += (e[i] ** 2) * (xi @ xi.T)
    return (n / (n - k)) * bread @ meat @ bread


class TestOlsFit:
    def test_exact_line(self):
        X = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
        y = np.array([1.0, 3.0, 5.0, 7.0])
        beta, residuals = ols_fit(X, y)
        assert np.allclose(beta, [1.0, 2.0], atol=1e-12)
        assert np.allclose(residuals, 0.0, atol=1e-12)

    def test_constant_target(self):
        rng = np.random.RandomState(0)
        X = np.column_stack([np.ones(10), rng.randn(10), rng.randn(10)])
        beta, _ = ols_fit(X, np.full(10, 4.5))
        assert np.allclose(beta, [4.5, 0.0, 0.0], atol=1e-12)

    def test_matches_normal_equations_oracle(self):
        rng = np.random.RandomState(7)
        X = np.column_stack([np.ones(20), rng.randn(20, 3)])
        y = rng.randn(20)
        beta, residuals = ols_fit(X, y)
        beta_oracle, residuals_oracle = oracle_ols(X, y)
        assert np.max(np.abs(beta - beta_oracle)) < 1e-10
        assert np.max(np.abs(residuals - residuals_oracle)) < 1e-10

    def test_rank_deficiency_names_columns(self):
        X = np.column_stack([np.ones(8), np.arange(8.0), 2 * np.arange(8.0)])
        with pytest.raises(ValueError, match="x2"):
            ols_fit(X, np.zeros(8), names=["intercept", "x1", "x2"])

    def test_non_finite_rejected(self):
        X = np.array([[1.0, np.nan], [1.0, 2.0], [1.0, 3.0]])
        with pytest.raises(ValueError, match="non-finite"):
            ols_fit(X, np.zeros(3))

    def test_needs_more_rows_than_columns(self):
        X = np.eye(3)
        with pytest.raises(ValueError, match="more observations"):
            ols_fit(X, np.zeros(3))

    def test_residual_orthogonality(self):
        rng = np.random.RandomState(3)
        for _ in range(5):
            X = np.column_stack([np.ones(25), rng.randn(25, 4)])
            y = rng.randn(25) * 10
            _, residuals = ols_fit(X, y)
            gram = np.abs(X.T @ residuals)
            assert np.max(gram) < 1e-8 * max(np.abs(y).max(), 1.0) * 25


class TestHC1:
    def test_zero_residuals_zero_matrix(self):
        rng = np.random.RandomState(1)
        X = np.column_stack([np.ones(10), rng.randn(10)])
        assert np.allclose(hc1_covariance(X, np.zeros(10)), 0.0)

    def test_orthonormal_unit_residuals_closed_form(self):
        # Orthonormal columns and |e_i| = 1 give V = (n/(n-k)) * (X'X)^-1 ... X'diag(1)X = I
        n = 16
        q, _ = np.linalg.qr(np.random.RandomState(2).randn(n, 3))
        e = np.ones(n)
        V = hc1_covariance(q, e)
        assert np.allclose(V, (n / (n - 3)) * np.eye(3), atol=1e-10)

    def test_matches_sandwich_oracle(self):
        rng = np.random.RandomState(9)
        X = np.column_stack([np.ones(30), rng.randn(30, 2)])
        y = X @ np.array([1.0, 2.0, -1.0]) + rng.randn(30) * np.linspace(0.1, 3.0, 30)
        _, residuals = ols_fit(X, y)
        V = hc1_covariance(X, residuals)
        V_oracle = oracle_hc1(X, residuals)
        assert np.max(np.abs(V - V_oracle)) < 1e-8

    def test_n_equals_k_rejected(self):
        X = np.eye(2)
        with pytest.raises(ValueError, match="n/" + "\\(n-k\\)"):
            hc1_covariance(X, np.zeros(2))

    def test_alternating_sign_constant_magnitude_reduces_to_classic(self):
        # e_i = +-c with X'e = 0: diag(e^2) = c^2 I, so HC1 == (n/(n-k)) c^2 (X'X)^-1.
        n, c = 12, 1.5
        X = np.column_stack([np.ones(n), np.tile([1.0, -1.0], n // 2)])
        e = c * np.tile([1.0, -1.0], n // 2)[::-1] * np.tile([1.0, 1.0], n // 2)
        e = c * np.array([1, -1, -1, 1] * 3, dtype=float)  # orthogonal to both columns
        assert np.allclose(X.T @ e, 0.0)
        V = hc1_covariance(X, e)
        classic = (n / (n - 2)) * c * c * np.linalg.inv(X.T @ X)
        assert np.allclose(V, classic, atol=1e-12)


class TestStudentT:
    def test_matches_scipy_within_1e10(self):
        for dof in (1, 2, 5, 10, 30, 136, 500):
            for t in (0.0, 0.17, 0.5, 1.0, 1.96, 2.5, 4.0, 8.0, 25.0):
                mine = t_two_sided_p(t, dof)
                reference = 2.0 * scipy_stats.t.sf(t, dof)
                assert abs(mine - reference) < 1e-10, (t, dof)

    def test_zero_t_gives_p_one(self):
        assert t_two_sided_p(0.0, 10) == 1.0

    def test_symmetry(self):
        for t in (0.3, 1.7, 5.0):
            assert t_two_sided_p(t, 7) == t_two_sided_p(-t, 7)

    def test_betainc_bounds(self):
        assert betainc_reg(2.0, 3.0, 0.0) == 0.0
        assert betainc_reg(2.0, 3.0, 1.0) == 1.0
        with pytest.raises(ValueError):
            betainc_reg(2.0, 3.0, 1.5)

    def test_betainc_matches_scipy_grid(self):
        from scipy.special import betainc as scipy_betainc

        for a in (0.5, 1.0, 2.5, 10.0, 68.0):
            for b in (0.5, 1.0, 4.0):
                for x in (0.001, 0.2, 0.5, 0.8, 0.999):
                    assert abs(betainc_reg(a, b, x) - scipy_betainc(a, b, x)) < 1e-10


class TestFitWithHC1:
    def _random_fit(self, seed=0, n=25, k=3):
        rng = np.random.RandomState(seed)
        X = np.column_stack([np.ones(n), rng.randn(n, k - 1)])
        y = X @ rng.randn(k) + rng.randn(n)
        names = ["intercept"] + [f"x{j}" for j in range(1, k)]
        return X, y, names

    def test_scale_equivariance(self):
        X, y, names = self._random_fit(seed=4)
        fit1 = fit_with_hc1(X, y, names)
        fit2 = fit_with_hc1(X, 100.0 * y, names)
        assert np.allclose(fit2.coefficients, 100.0 * fit1.coefficients, rtol=1e-12)
        assert np.allclose(fit2.se, 100.0 * fit1.se, rtol=1e-12)
        assert np.max(np.abs(fit2.t_stats - fit1.t_stats)) < 1e-10
        assert np.max(np.abs(fit2.p_values - fit1.p_values)) < 1e-10

    def test_perfect_fit_flagged_p_zero(self):
        X = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]])
        y = np.array([1.0, 3.0, 5.0, 7.0])
        fit = fit_with_hc1(X, y, ["intercept", "x"])
        assert fit.perfect_fit
        assert np.all(fit.p_values == 0.0)

    def test_se_is_sqrt_of_diagonal(self):
        X, y, names = self._random_fit(seed=5)
        fit = fit_with_hc1(X, y, names)
        assert np.allclose(fit.se, np.sqrt(np.diag(fit.covariance_hc1)))
        assert np.all((fit.p_values >= 0) & (fit.p_values <= 1))

    def test_coef_table_shape(self):
        X, y, names = self._random_fit()
        rows = coef_table(fit_with_hc1(X, y, names))
        assert [r[0] for r in rows] == names
        assert all(len(r) == 5 for r in rows)

    @given(st.floats(min_value=0.01, max_value=20.0), st.integers(min_value=2, max_value=200))
    def test_p_two_sidedness_property(self, t, dof):
        assert t_two_sided_p(t, dof) == t_two_sided_p(-t, dof)


class TestContrastFits:
    def test_show_hn_contrast_on_synth_rows(self):
        from launchpulse.align import bucket_hourly
        from launchpulse.features import build_feature_row
        from launchpulse.inference import contrast_fit
        from launchpulse.synth import SynthSpec, plan_corpus, _event, _snapshot, _star_log

        plans = plan_corpus(SynthSpec(n_repos=40, seed=3))
        rows = [
            build_feature_row(_event(p), _snapshot(p), bucket_hourly(_star_log(p), p.t0))
            for p in plans
        ]
        fit = contrast_fit(rows, "show_hn", "d48")
        assert "is_show_hn" in fit.column_names
        assert fit.n == 40
        fit_weekend = contrast_fit(rows, "weekend", "d48")
        assert "dow_weekend" in fit_weekend.column_names
        fit_hour = contrast_fit(rows, "hour", "d48")
        assert set(fit_hour.column_names) >= {"hour_bin_1", "hour_bin_2", "hour_bin_3"}
