"""Predictive models: elastic net by coordinate descent and least-squares boosting.

Both learners are deterministic for a fixed seed. Reductions accumulate
sequentially so reports are byte-stable across runs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_ENET_TOL = 1e-7
DEFAULT_ENET_MAX_ITER = 10000
DEFAULT_L1_GRID = (0.1, 0.5, 0.9)
DEFAULT_N_LAMBDAS = 50
DEFAULT_LAMBDA_MIN_RATIO = 1e-3

DEFAULT_GBT = {"n_trees": 300, "learning_rate": 0.05, "max_depth": 3, "min_leaf": 2}


# --- splitting ---------------------------------------------------------------


def train_test_split(rows: Sequence, ratio: float, seed: int) -> tuple[list, list]:
    """Deterministic shuffled partition; test size = round((1-ratio)*n)."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0,1): {ratio}")
    if len(rows) < 5:
        raise ValueError(f"need at least 5 rows to split, got {len(rows)}")
    order = list(range(len(rows)))
    random.Random(seed).shuffle(order)
    test_size = round((1.0 - ratio) * len(rows))
    test = [rows[i] for i in order[:test_size]]
    train = [rows[i] for i in order[test_size:]]
    return train, test


# --- elastic net -------------------------------------------------------------


@dataclass
class ElasticNetModel:
    intercept: float
    coefficients: np.ndarray  # original scale
    lam: float
    l1_ratio: float
    column_names: list[str]
    col_means: np.ndarray
    col_stds: np.ndarray  # population std; 0 marks a frozen constant column
    beta_std: np.ndarray  # internal standardized-scale coefficients
    converged: bool
    n_iter: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.coefficients


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    means = X.mean(axis=0)
    stds = np.sqrt(((X - means) ** 2).mean(axis=0))
    safe = np.where(stds > 0, stds, 1.0)
    return (X - means) / safe, means, stds


def enet_lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty that zeroes every slope at l1_ratio = 1.

    Uses the same per-column dot products as the descent loop, so soft
    thresholding at this penalty yields exact zeros.
    """
    X = np.asarray(X, dtype=float)
    Xs, _, stds = _standardize(X)
    yc = np.asarray(y, dtype=float) - float(np.mean(y))
    n = len(yc)
    grads = [abs(float(Xs[:, j] @ yc) / n) for j in range(X.shape[1]) if stds[j] > 0]
    return max(grads) if grads else 0.0


class _CDProblem:
    """Standardized design with cached Gram matrix for covariance-update descent.

    Building this once per dataset lets a cross-validation grid reuse the
    O(n k^2) setup across every (lambda, l1_ratio) fit.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("elastic net inputs contain non-finite values")
        self.n, self.k = X.shape
        self.Xs, self.means, self.stds = _standardize(X)
        self.y_mean = float(np.mean(y))
        yc = y - self.y_mean
        self.active = [j for j in range(self.k) if self.stds[j] > 0]
        self.gram = (self.Xs.T @ self.Xs) / self.n
        self.corr = np.array([float(self.Xs[:, j] @ yc) / self.n for j in range(self.k)])

    def solve(
        self, lam: float, l1_ratio: float, tol: float, max_iter: int, warm_start: np.ndarray | None
    ) -> tuple[np.ndarray, bool, int]:
        beta = np.zeros(self.k) if warm_start is None else warm_start.astype(float).copy()
        beta[self.stds == 0] = 0.0
        grad = self.gram @ beta  # running Gram * beta
        l1_pen = lam * l1_ratio
        denom = 1.0 + lam * (1.0 - l1_ratio)
        converged = False
        it = 0
        for it in range(1, max_iter + 1):
            max_delta = 0.0
            for j in self.active:
                old = beta[j]
                rho = self.corr[j] - float(grad[j]) + old  # gram[j, j] == 1
                new = _soft_threshold(rho, l1_pen) / denom
                if new != old:
                    grad += self.gram[:, j] * (new - old)
                    beta[j] = new
                    max_delta = max(max_delta, abs(new - old))
            if max_delta < tol:
                converged = True
                break
        return beta, converged, it


def _model_from(problem: _CDProblem, beta, lam, l1_ratio, column_names, converged, n_iter):
    coef = np.where(problem.stds > 0, beta / np.where(problem.stds > 0, problem.stds, 1.0), 0.0)
    intercept = problem.y_mean - float(coef @ problem.means)
    return ElasticNetModel(
        intercept=intercept,
        coefficients=coef,
        lam=lam,
        l1_ratio=l1_ratio,
        column_names=list(column_names) if column_names else [f"x{j}" for j in range(problem.k)],
        col_means=problem.means,
        col_stds=problem.stds,
        beta_std=beta,
        converged=converged,
        n_iter=n_iter,
    )


def elastic_net_fit(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    l1_ratio: float,
    tol: float = DEFAULT_ENET_TOL,
    max_iter: int = DEFAULT_ENET_MAX_ITER,
    column_names: list[str] | None = None,
    warm_start: np.ndarray | None = None,
) -> ElasticNetModel:
    """Cyclic coordinate descent with soft thresholding.

    Minimizes (1/2n)||y - Xb||^2 + lam*(l1*|b|_1 + (1-l1)/2*|b|_2^2) on
    internally standardized columns; zero-variance columns stay at 0.
    """
    if lam < 0 or not 0.0 <= l1_ratio <= 1.0:
        raise ValueError(f"bad penalty: lam={lam}, l1_ratio={l1_ratio}")
    problem = _CDProblem(X, y)
    beta, converged, n_iter = problem.solve(lam, l1_ratio, tol, max_iter, warm_start)
    return _model_from(problem, beta, lam, l1_ratio, column_names, converged, n_iter)


def cross_validate_enet(
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 5,
    lambda_grid: Sequence[float] | None = None,
    l1_grid: Sequence[float] = DEFAULT_L1_GRID,
    seed: int = 0,
) -> tuple[float, float, list[tuple[float, float, float]]]:
    """Seeded k-fold grid search; ties prefer the sparser (larger) penalty.

    Returns (best_lambda, best_l1_ratio, cv_table) where the table rows are
    (lambda, l1_ratio, mean validation MSE).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < folds:
        raise ValueError(f"need at least {folds} rows for {folds}-fold CV, got {n}")
    if lambda_grid is None:
        lam_max = max(enet_lambda_max(X, y), 1e-12)
        lambda_grid = np.geomspace(lam_max, DEFAULT_LAMBDA_MIN_RATIO * lam_max, DEFAULT_N_LAMBDAS)
    lambdas = sorted((float(v) for v in lambda_grid), reverse=True)

    order = list(range(n))
    random.Random(seed).shuffle(order)
    fold_sizes = [n // folds + (1 if i < n % folds else 0) for i in range(folds)]
    fold_ids, start = [], 0
    for size in fold_sizes:
        fold_ids.append(order[start : start + size])
        start += size

    mse_sums = {(lam, l1): 0.0 for lam in lambdas for l1 in l1_grid}
    for valid_idx in fold_ids:
        valid_mask = np.zeros(n, dtype=bool)
        valid_mask[valid_idx] = True
        problem = _CDProblem(X[~valid_mask], y[~valid_mask])
        X_va, y_va = X[valid_mask], y[valid_mask]
        for l1 in l1_grid:
            warm = None
            for lam in lambdas:  # descending path, warm-started
                beta, converged, it = problem.solve(
                    lam, l1, DEFAULT_ENET_TOL, DEFAULT_ENET_MAX_ITER, warm
                )
                warm = beta
                model = _model_from(problem, beta, lam, l1, None, converged, it)
                err = y_va - model.predict(X_va)
                mse_sums[(lam, l1)] += float(err @ err) / len(y_va)

    table = [(lam, l1, mse_sums[(lam, l1)] / folds) for lam in lambdas for l1 in l1_grid]
    best = min(table, key=lambda row: (row[2], -row[0], -row[1]))
    return best[0], best[1], table


# --- gradient boosted trees --------------------------------------------------


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def predict_one(self, x: np.ndarray) -> float:
        node = self
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value


class _FlatTree:
    """Array form of one tree so whole-matrix prediction stays vectorized."""

    def __init__(self, root: TreeNode):
        feature, threshold, left, right, value = [], [], [], [], []

        def add(node: TreeNode) -> int:
            idx = len(feature)
            feature.append(node.feature if not node.is_leaf else -1)
            threshold.append(node.threshold)
            left.append(0)
            right.append(0)
            value.append(node.value)
            if not node.is_leaf:
                left[idx] = add(node.left)
                right[idx] = add(node.right)
            return idx

        add(root)
        self.feature = np.array(feature, dtype=int)
        self.threshold = np.array(threshold, dtype=float)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.value = np.array(value, dtype=float)

    def predict(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[idx]
            internal = feat >= 0
            if not internal.any():
                break
            go_left = X[rows, np.maximum(feat, 0)] <= self.threshold[idx]
            idx = np.where(internal, np.where(go_left, self.left[idx], self.right[idx]), idx)
        return self.value[idx]


class _StackedTrees:
    """All trees of one ensemble in padded arrays for batched prediction."""

    def __init__(self, flats: list[_FlatTree]):
        count = len(flats)
        width = max(len(f.feature) for f in flats)
        self.feature = np.full((count, width), -1, dtype=int)
        self.threshold = np.zeros((count, width))
        self.left = np.zeros((count, width), dtype=int)
        self.right = np.zeros((count, width), dtype=int)
        self.value = np.zeros((count, width))
        for t, f in enumerate(flats):
            size = len(f.feature)
            self.feature[t, :size] = f.feature
            self.threshold[t, :size] = f.threshold
            self.left[t, :size] = f.left
            self.right[t, :size] = f.right
            self.value[t, :size] = f.value

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        """(n_trees, n_samples) leaf outputs, all trees walked in lockstep."""
        n = len(X)
        idx = np.zeros((self.feature.shape[0], n), dtype=int)
        cols = np.arange(n)
        while True:
            feat = np.take_along_axis(self.feature, idx, axis=1)
            internal = feat >= 0
            if not internal.any():
                break
            thr = np.take_along_axis(self.threshold, idx, axis=1)
            go_left = X[cols[None, :], np.maximum(feat, 0)] <= thr
            child = np.where(
                go_left,
                np.take_along_axis(self.left, idx, axis=1),
                np.take_along_axis(self.right, idx, axis=1),
            )
            idx = np.where(internal, child, idx)
        return np.take_along_axis(self.value, idx, axis=1)


@dataclass
class GBTModel:
    trees: list[TreeNode]
    learning_rate: float
    initial_prediction: float
    max_depth: int
    min_leaf: int
    n_trees: int
    seed: int
    column_names: list[str] = field(default_factory=list)
    train_mse_path: list[float] = field(default_factory=list)
    _stacked: _StackedTrees | None = None

    def _ensemble(self) -> _StackedTrees | None:
        if not self.trees:
            return None
        if self._stacked is None or self._stacked.feature.shape[0] != len(self.trees):
            self._stacked = _StackedTrees([_FlatTree(t) for t in self.trees])
        return self._stacked

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.full(len(X), self.initial_prediction)
        stacked = self._ensemble()
        if stacked is None:
            return out
        leaves = stacked.leaf_values(X)
        for t in range(leaves.shape[0]):  # sequential accumulation, tree order
            out += self.learning_rate * leaves[t]
        return out


def _leaf_value(residuals: np.ndarray) -> float:
    # Identical residuals get their exact common value; means of constants
    # must not pick up rounding noise.
    if residuals.min() == residuals.max():
        return float(residuals[0])
    return float(np.mean(residuals))


def _best_split(X: np.ndarray, r: np.ndarray, min_leaf: int) -> tuple[int, float, float] | None:
    """Best (feature, threshold, SSE reduction); ties go to the lower feature
    index, then the lower threshold. Thresholds are midpoints between
    consecutive distinct sorted values."""
    n, k = X.shape
    total = float(r.sum())
    mean_term = total * total / n
    positions = np.arange(min_leaf, n - min_leaf + 1)
    if len(positions) == 0:
        return None
    best: tuple[int, float, float] | None = None
    for j in range(k):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        if xs[0] == xs[-1]:
            continue
        prefix = np.cumsum(r[order])
        left_sum = prefix[positions - 1]
        right_sum = total - left_sum
        reduction = left_sum * left_sum / positions + right_sum * right_sum / (n - positions) - mean_term
        reduction[xs[positions - 1] == xs[positions]] = -np.inf
        pos = int(np.argmax(reduction))  # first maximum: lowest threshold
        if reduction[pos] > 0 and (best is None or reduction[pos] > best[2]):
            i = int(positions[pos])
            best = (j, (xs[i - 1] + xs[i]) / 2.0, float(reduction[pos]))
    return best


def _fit_tree(X: np.ndarray, r: np.ndarray, depth: int, max_depth: int, min_leaf: int) -> TreeNode:
    if depth >= max_depth or len(r) < 2 * min_leaf or r.min() == r.max():
        return TreeNode(value=_leaf_value(r))
    split = _best_split(X, r, min_leaf)
    if split is None:
        return TreeNode(value=_leaf_value(r))
    j, threshold, _ = split
    mask = X[:, j] <= threshold
    return TreeNode(
        feature=j,
        threshold=threshold,
        left=_fit_tree(X[mask], r[mask], depth + 1, max_depth, min_leaf),
        right=_fit_tree(X[~mask], r[~mask], depth + 1, max_depth, min_leaf),
    )


def gbt_fit(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = DEFAULT_GBT["n_trees"],
    learning_rate: float = DEFAULT_GBT["learning_rate"],
    max_depth: int = DEFAULT_GBT["max_depth"],
    min_leaf: int = DEFAULT_GBT["min_leaf"],
    seed: int = 0,
    column_names: list[str] | None = None,
) -> GBTModel:
    """Least-squares boosting: each tree fits the current residuals."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < 2 * min_leaf:
        raise ValueError(f"need at least {2 * min_leaf} rows, got {len(y)}")
    initial = float(y[0]) if y.min() == y.max() else float(np.mean(y))
    current = np.full(len(y), initial)
    trees: list[TreeNode] = []
    mse_path: list[float] = []
    for _ in range(n_trees):
        residuals = y - current
        tree = _fit_tree(X, residuals, 0, max_depth, min_leaf)
        trees.append(tree)
        current = current + learning_rate * _FlatTree(tree).predict(X)
        err = y - current
        mse_path.append(float(err @ err) / len(y))
    return GBTModel(
        trees=trees,
        learning_rate=learning_rate,
        initial_prediction=initial,
        max_depth=max_depth,
        min_leaf=min_leaf,
        n_trees=n_trees,
        seed=seed,
        column_names=list(column_names) if column_names else [f"x{j}" for j in range(X.shape[1])],
        train_mse_path=mse_path,
    )


# --- evaluation --------------------------------------------------------------


def evaluate(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float, float | None]:
    """(MAE, RMSE, R^2); R^2 is None when y_true has no variance."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if len(y_true) < 2:
        raise ValueError("need at least 2 observations to evaluate")
    err = y_true - y_pred
    mae = float(np.mean(np.abs(err)))
    rmse = math.sqrt(float(err @ err) / len(err))
    centered = y_true - np.mean(y_true)
    sst = float(centered @ centered)
    r2 = None if sst == 0 else 1.0 - float(err @ err) / sst
    return mae, rmse, r2


def permutation_importance(
    model,
    X_test: np.ndarray,
    y_test: np.ndarray,
    column_names: list[str],
    repeats: int = 20,
    seed: int = 0,
) -> list[tuple[str, float]]:
    """Mean R^2 drop when one column is shuffled; sorted descending.

    A fixed seed fixes every shuffle, so the ranking is fully deterministic.
    """
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    X_test = np.asarray(X_test, dtype=float)
    y_test = np.asarray(y_test, dtype=float)
    _, _, base_r2 = evaluate(y_test, model.predict(X_test))
    if base_r2 is None:
        raise ValueError("permutation importance needs variance in y_test")
    rs = np.random.RandomState(seed)
    scores = []
    for j, name in enumerate(column_names):
        drop_sum = 0.0
        for _ in range(repeats):
            perm = rs.permutation(len(y_test))
            Xp = X_test.copy()
            Xp[:, j] = X_test[perm, j]
            _, _, r2p = evaluate(y_test, model.predict(Xp))
            drop_sum += base_r2 - r2p
        scores.append((name, drop_sum / repeats))
    scores.sort(key=lambda item: -item[1])
    return scores


@dataclass
class ModelReport:
    model_id: str
    target: str
    feature_set: str
    mae: float
    rmse: float
    r2: float | None
    test_n: int
    importance: list[tuple[str, float]]
    hyperparameters: dict
