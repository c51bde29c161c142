"""OLS with HC1 heteroskedasticity-robust standard errors and t-tests.

The least-squares solve goes through an orthogonal decomposition rather
than the normal equations; the sandwich covariance carries the n/(n-k)
small-sample scale. Tail probabilities come from a regularized incomplete
beta evaluated by continued fraction, so there is no runtime statistics
dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureRow

# Controls shared by every timing contrast: project quality and posting-day
# composition, so a timing coefficient is not just a maturity proxy.
CONTRAST_CONTROLS = ("baseline_stars", "hn_score", "repo_age_days", "title_length")
CONTRASTS = ("show_hn", "weekend", "hour")

_PERFECT_FIT_REL = 1e-24  # SSE below this fraction of ||y||^2 counts as an exact fit


@dataclass
class RegressionFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    covariance_hc1: np.ndarray
    se: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    n: int
    k: int
    column_names: list[str]
    perfect_fit: bool = False
    dropped_columns: list[str] = field(default_factory=list)


def _check_matrix(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad regression shapes: X {X.shape}, y {y.shape}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("regression inputs contain non-finite values")
    return X, y


def _rank_deficient_columns(X: np.ndarray, names: list[str] | None) -> list[str]:
    offenders = []
    rank = 0
    for j in range(X.shape[1]):
        new_rank = np.linalg.matrix_rank(X[:, : j + 1])
        if new_rank == rank:
            offenders.append(names[j] if names else f"column {j}")
        rank = new_rank
    return offenders


def ols_fit(X: np.ndarray, y: np.ndarray, names: list[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and residuals via SVD-based lstsq."""
    X, y = _check_matrix(X, y)
    n, k = X.shape
    if n <= k:
        raise ValueError(f"need more observations than columns (n={n}, k={k})")
    if np.linalg.matrix_rank(X) < k:
        offenders = _rank_deficient_columns(X, names)
        raise ValueError(f"design matrix is rank deficient; dependent columns: {', '.join(offenders)}")
    beta, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    residuals = y - X @ beta
    return beta, residuals


def hc1_covariance(X: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    """HC1 sandwich: (n/(n-k)) * (X'X)^-1 X' diag(e^2) X (X'X)^-1."""
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    n, k = X.shape
    if n == k:
        raise ValueError("HC1 scale n/(n-k) is undefined when n == k")
    bread = np.linalg.inv(X.T @ X)
    meat = (X.T * (e * e)) @ X
    return (n / (n - k)) * (bread @ meat @ bread)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) with absolute error below 1e-10."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x out of [0,1]: {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """Two-sided Student-t tail probability P(|T| >= |t|)."""
    if dof <= 0:
        raise ValueError(f"degrees of freedom must be positive: {dof}")
    if math.isinf(t):
        return 0.0
    return betainc_reg(dof / 2.0, 0.5, dof / (dof + t * t))


def fit_with_hc1(X: np.ndarray, y: np.ndarray, names: list[str]) -> RegressionFit:
    """Full pipeline fit: coefficients, HC1 covariance, t statistics, p-values."""
    beta, residuals = ols_fit(X, y, names)
    n, k = X.shape
    cov = hc1_covariance(X, residuals)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    sse = float(residuals @ residuals)
    perfect = sse <= _PERFECT_FIT_REL * max(float(y @ y), 1.0)
    t_stats = np.zeros(k)
    p_values = np.zeros(k)
    for j in range(k):
        if perfect or se[j] == 0.0:
            t_stats[j] = math.inf if beta[j] != 0 else 0.0
            p_values[j] = 0.0
        else:
            t_stats[j] = beta[j] / se[j]
            p_values[j] = t_two_sided_p(t_stats[j], n - k)
    return RegressionFit(
        coefficients=beta,
        residuals=residuals,
        covariance_hc1=cov,
        se=se,
        t_stats=t_stats,
        p_values=p_values,
        n=n,
        k=k,
        column_names=list(names),
        perfect_fit=perfect,
    )


def coef_table(fit: RegressionFit) -> list[tuple[str, float, float, float, float]]:
    """Rows of (name, coefficient, se, t, p)."""
    return [
        (name, float(fit.coefficients[j]), float(fit.se[j]), float(fit.t_stats[j]), float(fit.p_values[j]))
        for j, name in enumerate(fit.column_names)
    ]


def _drop_constant_columns(X: np.ndarray, names: list[str]) -> tuple[np.ndarray, list[str], list[str]]:
    keep, dropped = [], []
    for j, name in enumerate(names):
        if name != "intercept" and np.all(X[:, j] == X[0, j]):
            dropped.append(name)
        else:
            keep.append(j)
    return X[:, keep], [names[j] for j in keep], dropped


def contrast_fit(rows: list[FeatureRow], contrast: str, target: str) -> RegressionFit:
    """One timing-contrast regression over the shared control set.

    show_hn adds the Show HN flag; weekend reports the pooled weekend day
    dummy; hour adds the three posting-hour dummies. Constant columns are
    dropped with notice so sparse corpora still fit.
    """
    from .features import DAY_DUMMIES, HOUR_DUMMIES, _column_value

    names = ["intercept", *CONTRAST_CONTROLS, *DAY_DUMMIES]
    if contrast == "show_hn":
        names.append("is_show_hn")
    elif contrast == "hour":
        names.extend(HOUR_DUMMIES)
    elif contrast != "weekend":
        raise ValueError(f"unknown contrast: {contrast}")

    X = np.array([[_column_value(r, c) for c in names] for r in rows], dtype=float)
    y = np.array([float(getattr(r, target)) for r in rows], dtype=float)
    X, kept_names, dropped = _drop_constant_columns(X, names)
    fit = fit_with_hc1(X, y, kept_names)
    fit.dropped_columns = dropped
    return fit


def contrast_effect_columns(contrast: str) -> tuple[str, ...]:
    from .features import HOUR_DUMMIES

    if contrast == "show_hn":
        return ("is_show_hn",)
    if contrast == "weekend":
        return ("dow_weekend",)
    if contrast == "hour":
        return tuple(HOUR_DUMMIES)
    raise ValueError(f"unknown contrast: {contrast}")
