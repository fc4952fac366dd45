# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Model registry and the six native binary classifiers.

Every learner is implemented here on numpy (trees via `trees.py`); given
the same spec, data and seed, training is bit-for-bit repeatable.

Registry (short id -> LogDir name):
    LR   LogisticRegression   L2 logistic loss, full-batch gradient descent
    SVM  sklearn_SVM          linear soft-margin hinge loss, seeded Pegasos steps
    DT   DTmodel              depth-limited Gini tree
    RF   random_forest        bagged Gini trees, sqrt(D) features per split
    GB   GradientBoosting     log-loss gradient boosting with shrinkage
    XGB  XGBmodel             second-order boosting, L2 leaves, min child weight
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import joblib
import numpy as np

from .config_loader import ConfigError
from .search_space import MODEL_LOGDIR_NAMES, canonical_model_id
from .transform import stage_rng
from .trees import GiniCriterion, NewtonCriterion, Tree, VarianceCriterion, grow_tree

_EPS = 1e-15
_MAX_HALVINGS = 20


class ModelError(Exception):
    """Model construction, training or prediction failed; `kind` is the LogDir model name."""

    def __init__(self, kind: str | None, message: str):
        self.kind = kind
        super().__init__(f"{kind}: {message}" if kind else message)


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


# =============================================================================
# LINEAR MODELS
# =============================================================================


class LogisticRegressionModel:
    def __init__(self, learning_rate: float, max_iter: int, l2: float, tol: float):
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.l2 = l2
        self.tol = tol
        self.weights = None
        self.bias = 0.0
        self.n_iter = 0

    def fit(self, features: np.ndarray, labels: np.ndarray, rng: np.random.Generator):
        n, d = features.shape
        w = np.zeros(d)
        b = 0.0
        for it in range(1, self.max_iter + 1):
            residual = sigmoid(features @ w + b) - labels
            grad_w = features.T @ residual / n + self.l2 * w
            grad_b = float(residual.mean())
            w -= self.learning_rate * grad_w
            b -= self.learning_rate * grad_b
            self.n_iter = it
            if max(np.abs(grad_w).max(initial=0.0), abs(grad_b)) < self.tol:
                break
        self.weights, self.bias = w, b
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return sigmoid(features @ self.weights + self.bias)


class LinearSVMModel:
    """Pegasos on the hinge loss; the averaged late iterate is kept.

    Probabilities are sigmoid(margin_scale * signed margin).
    """

    def __init__(self, C: float, epochs: int, batch_size: int, margin_scale: float):
        self.C = C
        self.epochs = epochs
        self.batch_size = batch_size
        self.margin_scale = margin_scale
        self.weights = None
        self.bias = 0.0

    def fit(self, features: np.ndarray, labels: np.ndarray, rng: np.random.Generator):
        n, d = features.shape
        signs = np.where(labels == 1, 1.0, -1.0)
        lam = 1.0 / (self.C * n)
        radius = 1.0 / math.sqrt(lam)
        w = np.zeros(d)
        b = 0.0
        w_sum = np.zeros(d)
        b_sum = 0.0
        averaged = 0
        batch = min(self.batch_size, n)
        for t in range(1, self.epochs + 1):
            rows = rng.choice(n, size=batch, replace=False)
            eta = 1.0 / (lam * t)
            margin = signs[rows] * (features[rows] @ w + b)
            violated = rows[margin < 1.0]
            grad_w = lam * w - (signs[violated] @ features[violated]) / batch
            grad_b = -float(signs[violated].sum()) / batch
            w = w - eta * grad_w
            b = b - eta * grad_b
            norm = float(np.linalg.norm(w))
            if norm > radius:
                w *= radius / norm
            if t > self.epochs // 2:
                w_sum += w
                b_sum += b
                averaged += 1
        self.weights = w_sum / averaged
        self.bias = b_sum / averaged
        return self

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.bias

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return sigmoid(self.margin_scale * self.decision_function(features))


# =============================================================================
# TREE MODELS
# =============================================================================


def _resolve_max_features(value, d: int) -> int | None:
    if value in (None, "all"):
        return None
    if value == "sqrt":
        return max(1, int(math.sqrt(d)))
    if value == "log2":
        return max(1, int(math.log2(d))) if d > 1 else 1
    if isinstance(value, float) and 0 < value <= 1:
        return max(1, int(value * d))
    return max(1, min(int(value), d))


class DecisionTreeModel:
    def __init__(self, max_depth: int, min_samples_split: int, min_samples_leaf: int):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.tree: Tree | None = None

    def fit(self, features: np.ndarray, labels: np.ndarray, rng: np.random.Generator):
        self.tree = grow_tree(
            features,
            labels,
            GiniCriterion(),
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
            min_samples_leaf=self.min_samples_leaf,
        )
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return self.tree.predict(features)

    @property
    def feature_importances(self) -> np.ndarray:
        return _normalized(self.tree.gains)


def _normalized(gains: np.ndarray) -> np.ndarray:
    total = gains.sum()
    return gains / total if total > 0 else np.full(len(gains), 1.0 / len(gains))


class _Forest:
    """Bootstrap-aggregated trees; shared by the classifier and the regressor."""

    criterion_factory = GiniCriterion

    def __init__(self, n_trees: int, max_depth: int, max_features, min_samples_leaf: int, bootstrap: bool):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.trees: list[Tree] = []

    def fit(self, features: np.ndarray, targets: np.ndarray, rng: np.random.Generator):
        n, d = features.shape
        max_features = _resolve_max_features(self.max_features, d)
        criterion = self.criterion_factory()
        self.trees = []
        for tree_rng in rng.spawn(self.n_trees):
            rows = tree_rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            self.trees.append(
                grow_tree(
                    features[rows],
                    targets[rows],
                    criterion,
                    max_depth=self.max_depth,
                    min_samples_leaf=self.min_samples_leaf,
                    max_features=max_features,
                    rng=tree_rng,
                )
            )
        return self

    def tree_predictions(self, features: np.ndarray) -> np.ndarray:
        """n_trees × M matrix of member outputs."""
        return np.vstack([tree.predict(features) for tree in self.trees])

    def predict_mean(self, features: np.ndarray) -> np.ndarray:
        return self.tree_predictions(features).mean(axis=0)

    @property
    def feature_importances(self) -> np.ndarray:
        """Impurity decrease summed over trees, normalized to 1."""
        return _normalized(np.sum([tree.gains for tree in self.trees], axis=0))


class RandomForestModel(_Forest):
    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return self.predict_mean(features)


class RandomForestRegressor(_Forest):
    """Variance-reduction forest; backs the configuration-importance analysis."""

    criterion_factory = VarianceCriterion

    def __init__(self, n_trees: int = 100, max_depth: int | None = None, max_features=None,
                 min_samples_leaf: int = 1, bootstrap: bool = True):
        super().__init__(n_trees, max_depth if max_depth is not None else 64, max_features, min_samples_leaf,
                         bootstrap)

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.predict_mean(features)


class _Booster:
    """Stage-wise additive log-odds model.

    Every stage is scaled by the shrinkage; if that step would raise the
    training log loss it is halved until it does not (zero after
    _MAX_HALVINGS), so loss_history is non-increasing.
    """

    def __init__(self, n_stages: int, learning_rate: float, max_depth: int):
        self.n_stages = n_stages
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.base_score = 0.0
        self.stages: list[tuple[Tree, float]] = []
        self.loss_history: list[float] = []

    def _stage_tree(self, features, labels, prob, rng) -> Tree:
        raise NotImplementedError

    def fit(self, features: np.ndarray, labels: np.ndarray, rng: np.random.Generator):
        prior = float(np.clip(labels.mean(), _EPS, 1 - _EPS))
        self.base_score = math.log(prior / (1 - prior))
        raw = np.full(len(labels), self.base_score)
        loss = log_loss(labels, sigmoid(raw))
        self.loss_history = [loss]
        self.stages = []
        for _ in range(self.n_stages):
            tree = self._stage_tree(features, labels, sigmoid(raw), rng)
            step = tree.predict(features)
            scale = self.learning_rate
            for _ in range(_MAX_HALVINGS):
                candidate = log_loss(labels, sigmoid(raw + scale * step))
                if candidate <= loss:
                    break
                scale /= 2.0
            else:
                scale = 0.0
                candidate = loss
            raw = raw + scale * step
            loss = candidate
            self.stages.append((tree, scale))
            self.loss_history.append(loss)
        return self

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        raw = np.full(len(features), self.base_score)
        for tree, scale in self.stages:
            raw = raw + scale * tree.predict(features)
        return raw

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_function(features))


class GradientBoostingModel(_Booster):
    """Regression trees on the negative log-loss gradient y - p, Newton leaf values."""

    def __init__(self, n_stages: int, learning_rate: float, max_depth: int, min_samples_leaf: int):
        super().__init__(n_stages, learning_rate, max_depth)
        self.min_samples_leaf = min_samples_leaf

    def _stage_tree(self, features, labels, prob, rng) -> Tree:
        residual = labels - prob
        tree = grow_tree(
            features,
            residual,
            VarianceCriterion(),
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
        )
        leaves = tree.apply(features)
        hessian = prob * (1 - prob)
        values = {}
        for leaf in np.unique(leaves):
            in_leaf = leaves == leaf
            denom = float(hessian[in_leaf].sum())
            values[int(leaf)] = float(residual[in_leaf].sum()) / denom if denom > _EPS else 0.0
        return tree.with_leaf_values(values)


class XGBoostModel(_Booster):
    def __init__(self, n_stages: int, learning_rate: float, max_depth: int, reg_lambda: float,
                 min_child_weight: float):
        super().__init__(n_stages, learning_rate, max_depth)
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight

    def _stage_tree(self, features, labels, prob, rng) -> Tree:
        targets = np.column_stack([prob - labels, prob * (1 - prob)])
        return grow_tree(
            features,
            targets,
            NewtonCriterion(self.reg_lambda),
            max_depth=self.max_depth,
            min_child_weight=self.min_child_weight,
        )


# =============================================================================
# REGISTRY
# =============================================================================


@dataclass(frozen=True)
class ModelInfo:
    short_id: str
    kind: str
    description: str
    defaults: Mapping[str, object]
    estimator: type


MODEL_REGISTRY: dict[str, ModelInfo] = {
    info.short_id: info
    for info in (
        ModelInfo(
            "LR",
            MODEL_LOGDIR_NAMES["LR"],
            "L2-regularized logistic regression, full-batch gradient descent",
            {"learning_rate": 0.1, "max_iter": 1000, "l2": 1e-4, "tol": 1e-6},
            LogisticRegressionModel,
        ),
        ModelInfo(
            "SVM",
            MODEL_LOGDIR_NAMES["SVM"],
            "linear soft-margin SVM, hinge-loss subgradient descent",
            {"C": 1.0, "epochs": 2000, "batch_size": 64, "margin_scale": 1.0},
            LinearSVMModel,
        ),
        ModelInfo(
            "DT",
            MODEL_LOGDIR_NAMES["DT"],
            "Gini decision tree",
            {"max_depth": 6, "min_samples_split": 2, "min_samples_leaf": 2},
            DecisionTreeModel,
        ),
        ModelInfo(
            "RF",
            MODEL_LOGDIR_NAMES["RF"],
            "random forest of bootstrap Gini trees",
            {"n_trees": 100, "max_depth": 8, "max_features": "sqrt", "min_samples_leaf": 1, "bootstrap": True},
            RandomForestModel,
        ),
        ModelInfo(
            "GB",
            MODEL_LOGDIR_NAMES["GB"],
            "gradient boosting on log-loss gradients",
            {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3, "min_samples_leaf": 1},
            GradientBoostingModel,
        ),
        ModelInfo(
            "XGB",
            MODEL_LOGDIR_NAMES["XGB"],
            "second-order regularized gradient boosting",
            {"n_stages": 100, "learning_rate": 0.1, "max_depth": 3, "reg_lambda": 1.0, "min_child_weight": 1.0},
            XGBoostModel,
        ),
    )
}


def _coerce(kind: str, key: str, value, default):
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        raise ModelError(kind, f"hyperparameter '{key}' must be a boolean, got {value!r}")
    if isinstance(default, str):
        # max_features also takes an int or a fraction
        if isinstance(value, (str, int, float)) and not isinstance(value, bool):
            return value
        raise ModelError(kind, f"hyperparameter '{key}' has invalid value {value!r}")
    try:
        number = type(default)(value)
    except (TypeError, ValueError):
        raise ModelError(kind, f"hyperparameter '{key}' must be numeric, got {value!r}") from None
    if isinstance(default, int) and number != value:
        raise ModelError(kind, f"hyperparameter '{key}' must be an integer, got {value!r}")
    if number < 0 or (number == 0 and key not in ("l2", "reg_lambda", "tol", "min_child_weight")):
        raise ModelError(kind, f"hyperparameter '{key}' must be positive, got {value!r}")
    return number


@dataclass(frozen=True)
class ModelSpec:
    """Model kind plus validated hyperparameters (defaults filled in)."""

    kind: str
    hyperparameters: Mapping[str, object] = field(default_factory=dict)

    @property
    def short_id(self) -> str:
        return canonical_model_id(self.kind)

    @property
    def info(self) -> ModelInfo:
        return MODEL_REGISTRY[self.short_id]


def model_spec(name: str, overrides: Mapping[str, object] | None = None) -> ModelSpec:
    """ModelSpec for a short id or LogDir name, defaults overlaid by `overrides`."""
    try:
        info = MODEL_REGISTRY[canonical_model_id(name)]
    except ConfigError:
        raise ModelError(str(name), "unknown model kind") from None
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(info.defaults))
    if unknown:
        raise ModelError(info.kind, f"unknown hyperparameter(s): {', '.join(unknown)}")
    params = {key: _coerce(info.kind, key, overrides.get(key, default), default)
              for key, default in info.defaults.items()}
    return ModelSpec(kind=info.kind, hyperparameters=params)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    n_features: int
    estimator: object

    @property
    def kind(self) -> str:
        return self.spec.kind


def _check_matrix(kind: str, features) -> np.ndarray:
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ModelError(kind, f"expected a 2-D feature matrix, got shape {features.shape}")
    if not np.all(np.isfinite(features)):
        raise ModelError(kind, "feature matrix contains non-finite values")
    return features


def train(spec: ModelSpec, features, labels, seed: int) -> TrainedModel:
    """Fit the model; deterministic for fixed (spec, data, seed)."""
    features = _check_matrix(spec.kind, features)
    labels = np.asarray(labels, dtype=int)
    if len(labels) != len(features):
        raise ModelError(spec.kind, f"{len(labels)} labels for {len(features)} rows")
    if len(labels) < 2 or len(np.unique(labels)) < 2:
        raise ModelError(spec.kind, "training labels contain a single class")
    if not set(np.unique(labels).tolist()) <= {0, 1}:
        raise ModelError(spec.kind, "training labels must be 0/1")

    estimator = spec.info.estimator(**spec.hyperparameters)
    estimator.fit(features, labels, stage_rng(seed, f"model:{spec.short_id}"))
    return TrainedModel(spec=spec, n_features=features.shape[1], estimator=estimator)


def predict_proba(model: TrainedModel, features) -> np.ndarray:
    """Probability of label 1 per row."""
    features = _check_matrix(model.kind, features)
    if features.shape[1] != model.n_features:
        raise ModelError(model.kind, f"model trained on {model.n_features} features, got {features.shape[1]}")
    return np.clip(model.estimator.predict_proba(features), 0.0, 1.0)


def classify(probabilities, threshold: float) -> np.ndarray:
    """Label 1 iff p >= threshold."""
    return (np.asarray(probabilities, dtype=float) >= threshold).astype(int)


def save_model(model: TrainedModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump(model, path)
    return path
