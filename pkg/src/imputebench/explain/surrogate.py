"""Bagged regression trees used as the surrogate of imputation error."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import make_rng
from ..errors import DataError

N_TREES = 100
MAX_DEPTH = 4
MIN_ROWS = 10


@dataclass
class RegressionTree:
    """Array-encoded binary tree; leaves have ``feature == -1``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        node = np.zeros(len(x), dtype=np.int64)
        rows = np.arange(len(x))
        for _ in range(len(self.feature)):
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                break
            go_left = x[rows, np.where(inner, feat, 0)] <= self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)
        return self.value[node]

    @property
    def used_features(self) -> np.ndarray:
        return np.unique(self.feature[self.feature >= 0])


def _best_split(x, y):
    """Variance-reduction split; ties go to the lower feature, then lower threshold."""
    n, d = x.shape
    total_sse = ((y - y.mean()) ** 2).sum()
    best = None
    for f in range(d):
        order = np.argsort(x[:, f], kind="stable")
        xs, ys = x[order, f], y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys**2)
        k = np.arange(1, n)
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        left_sse = csq[:-1] - csum[:-1] ** 2 / k
        right_sum = csum[-1] - csum[:-1]
        right_sse = (csq[-1] - csq[:-1]) - right_sum**2 / (n - k)
        gain = total_sse - (left_sse + right_sse)
        gain[~valid] = -np.inf
        i = int(np.argmax(gain))
        if best is None or gain[i] > best[0]:
            thr = 0.5 * (xs[i] + xs[i + 1])
            # adjacent floats: the midpoint may round up onto the right value
            best = (gain[i], f, thr if thr < xs[i + 1] else xs[i])
    if best is None or best[0] <= 1e-12 * max(total_sse, 1e-300):
        return None
    return best[1], best[2]


def _leaf_value(y):
    return float(y[0]) if np.all(y == y[0]) else float(y.mean())


def fit_tree(x, y, max_depth=MAX_DEPTH) -> RegressionTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(idx, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(_leaf_value(y[idx]))
        if depth < max_depth and len(idx) >= 2:
            split = _best_split(x[idx], y[idx])
            if split is not None:
                f, thr = split
                mask = x[idx, f] <= thr
                feature[node], threshold[node] = f, thr
                left[node] = grow(idx[mask], depth + 1)
                right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(len(y)), 0)
    return RegressionTree(np.array(feature), np.array(threshold), np.array(left),
                          np.array(right), np.array(value))


@dataclass
class SurrogateModel:
    trees: list
    feature_names: tuple
    baseline: float
    train_r2: float = field(default=float("nan"))

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.mean([t.predict(x) for t in self.trees], axis=0)


def train_surrogate(x, y, seed: int = 0, feature_names=None, n_trees: int = N_TREES,
                    max_depth: int = MAX_DEPTH) -> SurrogateModel:
    """Fit ``n_trees`` depth-limited trees, each on a seeded bootstrap of the rows."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(y) < MIN_ROWS:
        raise DataError(f"surrogate needs at least {MIN_ROWS} rows, got {len(y)}")
    rng = make_rng(seed)
    trees = []
    for _ in range(n_trees):
        rows = rng.integers(0, len(y), len(y))
        trees.append(fit_tree(x[rows], y[rows], max_depth))
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(x.shape[1]))
    model = SurrogateModel(trees, names, 0.0)
    pred = model.predict(x)
    model.baseline = float(pred.mean())
    ss_tot = ((y - y.mean()) ** 2).sum()
    model.train_r2 = 1.0 if ss_tot == 0 else float(1 - ((y - pred) ** 2).sum() / ss_tot)
    return model
