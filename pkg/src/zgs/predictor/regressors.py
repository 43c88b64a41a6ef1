"""Regression models mapping feature rows to predicted scores.

Ridge is solved by normal equations on standardized features; the tree
ensembles share one variance-reduction split finder. The forest
bootstraps rows and samples sqrt(d) candidate features per split; the
booster fits depth-limited trees to residuals with a fixed shrinkage.
All fits are deterministic given their seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientData, ShapeError
from .features import rows_to_matrix

RIDGE_LAMBDA = 1e-6
FOREST_TREES = 100
GBM_TREES = 500
MAX_DEPTH = 5
GBM_SHRINKAGE = 0.05


@dataclass
class ScoreMatrix:
    """Predicted scores, one row per model and one column per dataset."""

    model_ids: tuple[str, ...]
    dataset_ids: tuple[str, ...]
    S: np.ndarray

    def column(self, dataset_id: str) -> np.ndarray:
        return self.S[:, self.dataset_ids.index(dataset_id)]


@dataclass
class RidgeModel:
    mean: np.ndarray
    std: np.ndarray
    keep: np.ndarray  # boolean mask of non-constant training features
    w: np.ndarray
    intercept: float
    n_features: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got {X.shape[1]}")
        Xs = (X[:, self.keep] - self.mean) / self.std
        return Xs @ self.w + self.intercept


def _check_rows(rows):
    labeled = [r for r in rows if r.y is not None]
    if len(labeled) < 2:
        raise InsufficientData(f"need at least 2 labeled rows, got {len(labeled)}")
    return labeled


def train_ridge(rows) -> RidgeModel:
    """Least squares with an L2 penalty of 1e-6, solved by normal equations.

    Features are standardized with training-set statistics; constant
    features are dropped. The intercept is the training-label mean.
    """
    labeled = _check_rows(rows)
    X, y = rows_to_matrix(labeled)
    mean_all = X.mean(axis=0)
    std_all = X.std(axis=0)
    keep = std_all > 0.0
    Xs = (X[:, keep] - mean_all[keep]) / std_all[keep]
    yc = y - y.mean()
    d = Xs.shape[1]
    if d == 0:
        w = np.zeros(0)
    else:
        A = Xs.T @ Xs + RIDGE_LAMBDA * np.eye(d)
        w = np.linalg.solve(A, Xs.T @ yc)
    return RidgeModel(
        mean=mean_all[keep],
        std=std_all[keep],
        keep=keep,
        w=w,
        intercept=float(y.mean()),
        n_features=X.shape[1],
    )


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    value: float = 0.0

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.feature < 0:
            return np.full(X.shape[0], self.value)
        mask = X[:, self.feature] <= self.threshold
        out = np.empty(X.shape[0])
        if mask.any():
            out[mask] = self.left.predict(X[mask])
        if (~mask).any():
            out[~mask] = self.right.predict(X[~mask])
        return out


def _best_split(X, y, idx, feat_ids):
    """Minimize total child squared error; ties keep the first candidate."""
    best = None  # (sse, feature, threshold)
    n = len(idx)
    for f in feat_ids:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        ys = y[idx][order]
        cut = np.nonzero(xs_sorted[1:] > xs_sorted[:-1])[0] + 1  # split positions
        if len(cut) == 0:
            continue
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total_sum, total_sq = csum[-1], csq[-1]
        nl = cut.astype(float)
        sl, ql = csum[cut - 1], csq[cut - 1]
        nr = n - nl
        sse = (ql - sl * sl / nl) + ((total_sq - ql) - (total_sum - sl) ** 2 / nr)
        k = int(np.argmin(sse))
        if best is None or sse[k] < best[0] - 1e-15:
            pos = cut[k]
            thr = 0.5 * (xs_sorted[pos - 1] + xs_sorted[pos])
            best = (float(sse[k]), f, thr)
    return best


def _grow_tree(X, y, idx, depth, max_depth, max_features, rng) -> _TreeNode:
    node = _TreeNode(value=float(y[idx].mean()))
    if depth >= max_depth or len(idx) < 2 or np.ptp(y[idx]) == 0.0:
        return node
    d = X.shape[1]
    if max_features is not None and max_features < d:
        feat_ids = np.sort(rng.choice(d, size=max_features, replace=False))
    else:
        feat_ids = np.arange(d)
    best = _best_split(X, y, idx, feat_ids)
    if best is None:
        return node
    _, node.feature, node.threshold = best
    mask = X[idx, node.feature] <= node.threshold
    node.left = _grow_tree(X, y, idx[mask], depth + 1, max_depth, max_features, rng)
    node.right = _grow_tree(X, y, idx[~mask], depth + 1, max_depth, max_features, rng)
    return node


@dataclass
class ForestModel:
    trees: list = field(default_factory=list)
    n_features: int = 0

    def predict(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.mean([t.predict(X) for t in self.trees], axis=0)


def train_forest(rows, trees: int = FOREST_TREES, max_depth: int = MAX_DEPTH,
                 seed: int = 0) -> ForestModel:
    """Bootstrap forest of variance-reduction trees over sqrt(d) feature
    subsets per split; prediction is the mean over trees."""
    labeled = _check_rows(rows)
    X, y = rows_to_matrix(labeled)
    n, d = X.shape
    max_features = max(1, int(np.sqrt(d)))
    rng = np.random.default_rng(seed)
    model = ForestModel(n_features=d)
    for _ in range(trees):
        idx = rng.integers(0, n, size=n)
        model.trees.append(_grow_tree(X, y, idx, 0, max_depth, max_features, rng))
    return model


@dataclass
class GbmModel:
    init: float = 0.0
    trees: list = field(default_factory=list)
    shrinkage: float = GBM_SHRINKAGE
    n_features: int = 0
    train_mse: list = field(default_factory=list)  # per boosting round

    def predict(self, X: np.ndarray) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ShapeError(f"expected {self.n_features} features, got {X.shape[1]}")
        out = np.full(X.shape[0], self.init)
        for tree in self.trees:
            out += self.shrinkage * tree.predict(X)
        return out


def train_gbm(rows, trees: int = GBM_TREES, max_depth: int = MAX_DEPTH, seed: int = 0,
              shrinkage: float = GBM_SHRINKAGE) -> GbmModel:
    """Squared-loss boosting: depth-limited trees fit to residuals.

    Split search uses all features; nothing is randomized, the seed only
    keeps the signature uniform with the forest.
    """
    labeled = _check_rows(rows)
    X, y = rows_to_matrix(labeled)
    n, d = X.shape
    rng = np.random.default_rng(seed)
    model = GbmModel(init=float(y.mean()), shrinkage=shrinkage, n_features=d)
    current = np.full(n, model.init)
    idx = np.arange(n)
    for _ in range(trees):
        residual = y - current
        tree = _grow_tree(X, residual, idx, 0, max_depth, None, rng)
        model.trees.append(tree)
        current = current + shrinkage * tree.predict(X)
        model.train_mse.append(float(np.mean((y - current) ** 2)))
    return model


def predict(model, rows) -> ScoreMatrix:
    """Score every requested pair; pairs must form a complete grid."""
    model_ids = tuple(sorted({r.model_id for r in rows}))
    dataset_ids = tuple(sorted({r.dataset_id for r in rows}))
    if len(rows) != len(model_ids) * len(dataset_ids):
        raise ShapeError(
            f"{len(rows)} rows do not form a {len(model_ids)}x{len(dataset_ids)} grid"
        )
    X, _ = rows_to_matrix(rows)
    scores = model.predict(X)
    S = np.empty((len(model_ids), len(dataset_ids)))
    m_index = {m: i for i, m in enumerate(model_ids)}
    d_index = {d: j for j, d in enumerate(dataset_ids)}
    for row, s in zip(rows, scores):
        S[m_index[row.model_id], d_index[row.dataset_id]] = s
    return ScoreMatrix(model_ids=model_ids, dataset_ids=dataset_ids, S=S)
