# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Flat-array binary trees shared by every tree-based learner.

A criterion turns per-sample targets into additive statistics and scores a
node from their sum; the gain of a split is score(parent) - score(left) -
score(right). Three criteria cover all learners:

- GiniCriterion: class-1 frequency leaves (decision tree, random forest)
- VarianceCriterion: mean leaves (gradient boosting, forest regressor)
- NewtonCriterion: -G/(H + lambda) leaves on (gradient, hessian) pairs
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MIN_GAIN = 1e-12


class GiniCriterion:
    name = "gini"

    def sample_stats(self, targets: np.ndarray) -> np.ndarray:
        targets = np.asarray(targets, dtype=float)
        return np.column_stack([np.ones_like(targets), targets])

    def score(self, stats: np.ndarray) -> np.ndarray:
        """Gini impurity times node size."""
        n, pos = stats[..., 0], stats[..., 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(n > 0, 2.0 * pos * (n - pos) / n, 0.0)

    def leaf_value(self, stats: np.ndarray) -> float:
        return float(stats[1] / stats[0]) if stats[0] > 0 else 0.0

    def child_weight(self, stats: np.ndarray) -> np.ndarray:
        return stats[..., 0]


class VarianceCriterion:
    name = "variance"

    def sample_stats(self, targets: np.ndarray) -> np.ndarray:
        targets = np.asarray(targets, dtype=float)
        return np.column_stack([np.ones_like(targets), targets, targets**2])

    def score(self, stats: np.ndarray) -> np.ndarray:
        """Sum of squared deviations from the node mean."""
        n, s1, s2 = stats[..., 0], stats[..., 1], stats[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(n > 0, s2 - s1**2 / n, 0.0)

    def leaf_value(self, stats: np.ndarray) -> float:
        return float(stats[1] / stats[0]) if stats[0] > 0 else 0.0

    def child_weight(self, stats: np.ndarray) -> np.ndarray:
        return stats[..., 0]


class NewtonCriterion:
    """Second-order gain with L2 leaf regularization; targets are (g, h) rows."""

    name = "newton"

    def __init__(self, reg_lambda: float = 1.0):
        self.reg_lambda = reg_lambda

    def sample_stats(self, targets: np.ndarray) -> np.ndarray:
        return np.asarray(targets, dtype=float).reshape(-1, 2)

    def score(self, stats: np.ndarray) -> np.ndarray:
        g, h = stats[..., 0], stats[..., 1]
        return -0.5 * g**2 / (h + self.reg_lambda)

    def leaf_value(self, stats: np.ndarray) -> float:
        return float(-stats[0] / (stats[1] + self.reg_lambda))

    def child_weight(self, stats: np.ndarray) -> np.ndarray:
        return stats[..., 1]


@dataclass(frozen=True, eq=False)
class Tree:
    """Node arrays with the root at 0; feature == -1 marks a leaf. Rows go left when x <= threshold."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gains: np.ndarray
    n_features: int

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=int)
        for node in range(self.node_count):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        features = np.asarray(features, dtype=float)
        rows = np.arange(len(features))
        node = np.zeros(len(features), dtype=int)
        while True:
            split = self.feature[node]
            active = split >= 0
            if not active.any():
                return node
            column = np.where(active, split, 0)
            goes_left = features[rows, column] <= self.threshold[node]
            node = np.where(active, np.where(goes_left, self.left[node], self.right[node]), node)

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.value[self.apply(features)]

    def with_leaf_values(self, values: dict[int, float]) -> Tree:
        value = self.value.copy()
        for leaf, v in values.items():
            value[leaf] = v
        return Tree(self.feature, self.threshold, self.left, self.right, value, self.gains, self.n_features)


def _best_split(
    features: np.ndarray,
    stats: np.ndarray,
    rows: np.ndarray,
    candidates: np.ndarray,
    criterion,
    min_samples_leaf: int,
    min_child_weight: float,
) -> tuple[int, float, float] | None:
    node_stats = stats[rows]
    total = node_stats.sum(axis=0)
    parent = float(criterion.score(total))
    best = None
    for f in candidates:
        x = features[rows, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cum = np.cumsum(node_stats[order], axis=0)[:-1]
        rest = total - cum
        left_n = np.arange(1, len(rows))
        ok = (xs[:-1] < xs[1:]) & (left_n >= min_samples_leaf) & (len(rows) - left_n >= min_samples_leaf)
        if min_child_weight > 0:
            ok &= (criterion.child_weight(cum) >= min_child_weight) & (criterion.child_weight(rest) >= min_child_weight)
        if not ok.any():
            continue
        gains = parent - criterion.score(cum) - criterion.score(rest)
        gains = np.where(ok, gains, -np.inf)
        i = int(np.argmax(gains))
        if gains[i] > _MIN_GAIN and (best is None or gains[i] > best[2]):
            best = (int(f), float((xs[i] + xs[i + 1]) / 2.0), float(gains[i]))
    return best


def grow_tree(
    features: np.ndarray,
    targets: np.ndarray,
    criterion,
    *,
    max_depth: int,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    min_child_weight: float = 0.0,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Depth-first greedy growth.

    With max_features set, each split draws that many candidate columns
    from `rng`; equal gains resolve to the lower column and the lower
    threshold.
    """
    features = np.asarray(features, dtype=float)
    n, d = features.shape
    stats = criterion.sample_stats(targets)
    if max_features is not None and max_features < d and rng is None:
        raise ValueError("feature subsampling needs a generator")

    feature, threshold, left, right, value = [], [], [], [], []
    gains = np.zeros(d)

    def new_node(rows: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(criterion.leaf_value(stats[rows].sum(axis=0)))
        return len(feature) - 1

    all_rows = np.arange(n)
    stack = [(new_node(all_rows), all_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= max_depth or len(rows) < min_samples_split:
            continue
        if max_features is not None and max_features < d:
            candidates = np.sort(rng.choice(d, size=max_features, replace=False))
        else:
            candidates = np.arange(d)
        split = _best_split(features, stats, rows, candidates, criterion, min_samples_leaf, min_child_weight)
        if split is None:
            continue
        f, t, gain = split
        mask = features[rows, f] <= t
        gains[f] += gain
        feature[node], threshold[node] = f, t
        left[node] = new_node(rows[mask])
        right[node] = new_node(rows[~mask])
        stack.append((right[node], rows[~mask], depth + 1))
        stack.append((left[node], rows[mask], depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        value=np.asarray(value, dtype=float),
        gains=gains,
        n_features=d,
    )
