# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Tests for models.py: registry and hyperparameter validation, training
contracts, determinism and persistence of the six classifiers."""

import joblib
import numpy as np
import pytest

from branchlab.models import (
    MODEL_REGISTRY,
    GradientBoostingModel,
    LogisticRegressionModel,
    ModelError,
    RandomForestModel,
    RandomForestRegressor,
    XGBoostModel,
    classify,
    model_spec,
    predict_proba,
    save_model,
    train,
)
from branchlab.trees import Tree

from .conftest import blob_arrays

FAST = {
    "LR": {},
    "SVM": {"epochs": 300},
    "DT": {},
    "RF": {"n_trees": 15},
    "GB": {"n_stages": 20},
    "XGB": {"n_stages": 20},
}


def _noisy_classes(seed=0, n=80):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    features = rng.normal(size=(n, 3)) + 0.7 * labels[:, np.newaxis]
    return features, labels


class TestRegistry:
    def test_six_models(self):
        assert list(MODEL_REGISTRY) == ["LR", "SVM", "DT", "RF", "GB", "XGB"]

    def test_logdir_name_accepted(self):
        spec = model_spec("XGBmodel")
        assert spec.short_id == "XGB"
        assert spec.kind == "XGBmodel"
        assert spec.hyperparameters["reg_lambda"] == 1.0

    def test_override_merges_with_defaults(self):
        spec = model_spec("DT", {"max_depth": 3})
        assert spec.hyperparameters == {"max_depth": 3, "min_samples_split": 2, "min_samples_leaf": 2}

    def test_unknown_kind(self):
        with pytest.raises(ModelError):
            model_spec("KNN")

    def test_unknown_hyperparameter(self):
        with pytest.raises(ModelError):
            model_spec("LR", {"momentum": 0.9})

    @pytest.mark.parametrize(
        "name,overrides",
        [
            ("DT", {"max_depth": 2.5}),
            ("RF", {"n_trees": 0}),
            ("LR", {"learning_rate": -1.0}),
            ("RF", {"bootstrap": "yes"}),
            ("GB", {"n_stages": "many"}),
        ],
    )
    def test_invalid_values(self, name, overrides):
        with pytest.raises(ModelError):
            model_spec(name, overrides)

    def test_zero_regularization_allowed(self):
        assert model_spec("XGB", {"reg_lambda": 0}).hyperparameters["reg_lambda"] == 0.0


class TestTraining:
    @pytest.mark.parametrize("name", list(FAST))
    def test_learns_separable_clusters(self, name):
        features, labels = blob_arrays()
        model = train(model_spec(name, FAST[name]), features, labels, seed=1)
        probs = predict_proba(model, features)
        assert probs.shape == (len(labels),)
        assert np.all((probs >= 0.0) & (probs <= 1.0))
        assert np.mean(classify(probs, 0.5) == labels) >= 0.95

    @pytest.mark.parametrize("name", list(FAST))
    def test_deterministic(self, name):
        features, labels = blob_arrays()
        spec = model_spec(name, FAST[name])
        a = predict_proba(train(spec, features, labels, seed=3), features)
        b = predict_proba(train(spec, features, labels, seed=3), features)
        assert np.array_equal(a, b)

    def test_forest_probability_is_mean_of_member_trees(self):
        features, labels = _noisy_classes()
        model = train(model_spec("RF", {"n_trees": 7}), features, labels, seed=5)
        members = np.mean([tree.predict(features) for tree in model.estimator.trees], axis=0)
        assert len(model.estimator.trees) == 7
        assert np.allclose(predict_proba(model, features), members, rtol=0.0, atol=1e-12)

    def test_forest_seed_isolation(self):
        features, labels = _noisy_classes()
        spec = model_spec("RF", {"n_trees": 5})
        first = predict_proba(train(spec, features, labels, seed=1), features)
        again = predict_proba(train(spec, features, labels, seed=1), features)
        other = predict_proba(train(spec, features, labels, seed=2), features)
        assert np.array_equal(first, again)
        assert not np.array_equal(first, other)

    def test_depth_one_tree_cannot_fit_xor(self):
        features = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
        labels = np.array([0, 1, 1, 0])
        model = train(model_spec("DT", {"max_depth": 1, "min_samples_leaf": 1}), features, labels, seed=0)
        assert np.mean(classify(predict_proba(model, features), 0.5) == labels) <= 0.75

    def test_single_class_rejected(self):
        with pytest.raises(ModelError):
            train(model_spec("LR"), np.ones((4, 2)), [1, 1, 1, 1], seed=0)

    def test_non_binary_labels_rejected(self):
        with pytest.raises(ModelError):
            train(model_spec("LR"), np.ones((4, 2)), [0, 1, 2, 1], seed=0)

    def test_non_finite_features_rejected(self):
        features = np.ones((4, 2))
        features[0, 0] = np.nan
        with pytest.raises(ModelError):
            train(model_spec("DT"), features, [0, 1, 0, 1], seed=0)

    def test_prediction_width_checked(self):
        features, labels = blob_arrays()
        model = train(model_spec("LR"), features, labels, seed=0)
        with pytest.raises(ModelError):
            predict_proba(model, features[:, :2])

    @pytest.mark.parametrize("booster", [GradientBoostingModel, XGBoostModel])
    def test_boosting_loss_never_increases(self, booster):
        features, labels = blob_arrays()
        kwargs = {"n_stages": 15, "learning_rate": 0.5, "max_depth": 2}
        if booster is GradientBoostingModel:
            model = booster(min_samples_leaf=1, **kwargs)
        else:
            model = booster(reg_lambda=1.0, min_child_weight=1.0, **kwargs)
        model.fit(features, labels, np.random.default_rng(0))
        history = np.asarray(model.loss_history)
        assert len(history) == 16
        assert np.all(np.diff(history) <= 1e-12)

    def test_tree_importances_on_separating_column(self):
        features, labels = blob_arrays()
        model = train(model_spec("DT"), features, labels, seed=0)
        importances = model.estimator.feature_importances
        assert importances.sum() == pytest.approx(1.0)
        assert importances[2] == 0.0


class TestProbabilities:
    def test_zero_weight_logistic_is_half(self):
        model = LogisticRegressionModel(0.1, 10, 0.0, 1e-6)
        model.weights = np.zeros(3)
        assert model.predict_proba(np.ones((4, 3))).tolist() == [0.5] * 4

    def test_unanimous_forest(self):
        leaf = Tree(
            feature=np.array([-1]),
            threshold=np.array([0.0]),
            left=np.array([-1]),
            right=np.array([-1]),
            value=np.array([1.0]),
            gains=np.zeros(2),
            n_features=2,
        )
        forest = RandomForestModel(3, 4, None, 1, True)
        forest.trees = [leaf, leaf, leaf]
        assert forest.predict_proba(np.zeros((2, 2))).tolist() == [1.0, 1.0]

    @pytest.mark.parametrize("p,threshold,expected", [(0.40, 0.35, 1), (0.40, 0.5, 0), (0.5, 0.5, 1)])
    def test_classify_threshold(self, p, threshold, expected):
        assert classify([p], threshold).tolist() == [expected]

    def test_classify_monotone_in_threshold(self):
        probs = np.random.default_rng(8).uniform(size=200)
        positives = [int(classify(probs, t).sum()) for t in np.linspace(0.0, 1.0, 101)]
        assert positives[0] == 200
        assert np.all(np.diff(positives) <= 0)


class TestForestRegressor:
    def test_fits_monotone_target(self):
        x = np.linspace(0.0, 10.0, 60).reshape(-1, 1)
        y = 2.0 * x[:, 0]
        forest = RandomForestRegressor(n_trees=20).fit(x, y, np.random.default_rng(0))
        predictions = forest.predict(x)
        assert np.corrcoef(predictions, y)[0, 1] > 0.95
        assert predictions.min() >= 0.0 and predictions.max() <= 20.0


class TestPersistence:
    def test_saved_model_predicts_identically(self, tmp_path):
        features, labels = blob_arrays()
        model = train(model_spec("RF", {"n_trees": 5}), features, labels, seed=2)
        path = save_model(model, tmp_path / "models" / "rf.joblib")
        restored = joblib.load(path)
        assert restored.spec == model.spec
        assert np.array_equal(predict_proba(restored, features), predict_proba(model, features))
