"""Random forest of CART trees (Gini impurity) with probability leaves.

Trees are stored as flat arrays so they serialize directly: node ``k`` is a
leaf when ``feature[k] == -1``; otherwise samples with
``x[feature[k]] <= threshold[k]`` go to ``left[k]`` and the rest to
``right[k]``. ``value[k]`` is the positive-class fraction of the training
samples that reached the node.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DEPTH = 12
MIN_SAMPLES_SPLIT = 2


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def score(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            rows = np.nonzero(active)[0]
            n = node[rows]
            go_left = X[rows, self.feature[n]] <= self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return self.value[node]


@dataclass
class ForestModel:
    trees: list[Tree]
    seed: int
    n_features: int

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    def score(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.mean([t.score(X) for t in self.trees], axis=0)


def gini(labels: np.ndarray) -> float:
    if len(labels) == 0:
        return 0.0
    p = labels.mean()
    return 2.0 * p * (1.0 - p)


def best_split(X: np.ndarray, y: np.ndarray, features) -> tuple[int, float, float] | None:
    """Lowest weighted-Gini split over ``features``, thresholds at midpoints
    between consecutive distinct values. Ties keep the earlier candidate."""
    n = len(y)
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="mergesort")
        xs, ys = X[order, f], y[order]
        boundaries = np.nonzero(xs[1:] != xs[:-1])[0]
        if len(boundaries) == 0:
            continue
        pos_left = np.cumsum(ys)[boundaries]
        n_left = boundaries + 1.0
        n_right = n - n_left
        pos_right = ys.sum() - pos_left
        p_l = pos_left / n_left
        p_r = pos_right / n_right
        weighted = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
        k = int(np.argmin(weighted))
        if best is None or weighted[k] < best[2]:
            threshold = (xs[boundaries[k]] + xs[boundaries[k] + 1]) / 2.0
            best = (int(f), float(threshold), float(weighted[k]))
    return best


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    max_features: int,
    max_depth: int = MAX_DEPTH,
) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(v: float) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(v)
        return len(feature) - 1

    root = new_node(float(y.mean()))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        if depth >= max_depth or len(idx) < MIN_SAMPLES_SPLIT or ys.min() == ys.max():
            continue
        candidates = rng.choice(X.shape[1], size=min(max_features, X.shape[1]), replace=False)
        split = best_split(X[idx], ys, candidates)
        if split is None:
            continue
        f, t, _ = split
        mask = X[idx, f] <= t
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, t
        left[node] = new_node(float(y[li].mean()))
        right[node] = new_node(float(y[ri].mean()))
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(value, dtype=np.float64),
    )


def default_max_features(n_features: int) -> int:
    return max(1, int(round(np.sqrt(n_features))))


def train_forest(
    features,
    labels,
    tree_count: int = 33,
    seed: int = 0,
    max_depth: int = MAX_DEPTH,
    max_features: int | None = None,
    bootstrap: bool = True,
) -> ForestModel:
    """Grow ``tree_count`` trees, tree ``t`` drawing its bootstrap resample
    and feature candidates from a generator seeded with ``seed + t``."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features must be 2-D with one row per label")
    if len(y) < 2:
        raise ValueError("need at least 2 examples")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("both classes must be present")
    if tree_count < 1:
        raise ValueError("tree_count must be >= 1")
    m = max_features or default_max_features(X.shape[1])
    trees = []
    for t in range(tree_count):
        rng = np.random.default_rng(seed + t)
        rows = rng.integers(0, len(y), size=len(y)) if bootstrap else np.arange(len(y))
        trees.append(fit_tree(X[rows], y[rows], rng, m, max_depth))
    return ForestModel(trees, seed, X.shape[1])


def forest_score(model: ForestModel, features) -> float | np.ndarray:
    """Mean positive-leaf fraction; a scalar for one feature vector."""
    x = np.asarray(features, dtype=np.float64)
    out = model.score(x)
    return float(out[0]) if x.ndim == 1 else out


def forest_tensors(model: ForestModel) -> dict[str, np.ndarray]:
    tensors = {}
    for i, t in enumerate(model.trees):
        tensors[f"tree{i}"] = np.stack(
            [t.feature, t.threshold, t.left, t.right, t.value]
        ).astype(np.float64)
    return tensors


def forest_from_tensors(tensors: dict[str, np.ndarray], count: int, seed: int, n_features: int) -> ForestModel:
    trees = []
    for i in range(count):
        a = tensors[f"tree{i}"]
        trees.append(Tree(a[0].astype(int), a[1].copy(), a[2].astype(int), a[3].astype(int), a[4].copy()))
    return ForestModel(trees, seed, n_features)
