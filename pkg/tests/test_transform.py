# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Tests for transform.py: information-gain scoring, feature selection,
scalers, augmentation and imbalance handling."""

import numpy as np
import pytest

from branchlab.transform import (
    TransformError,
    TransformSettings,
    adasyn,
    adasyn_weights,
    apply_scaler,
    augment,
    binary_infgain,
    fit_scaler,
    gaussian_noise,
    information_gain,
    interpolate,
    mixup,
    nearest_neighbors,
    random_undersample,
    rebalance,
    select_features,
    smote,
    stage_rng,
    tomek_links,
    tomek_pairs,
)

from .conftest import blob_arrays, make_dataset


def _imbalanced_blobs():
    features, labels = blob_arrays()
    return features[:40], labels[:40]  # 30 negatives, 10 positives


def _mixed_classes(seed, n=80, d=3, n_minority=32):
    """Overlapping classes; class 1 is the minority."""
    rng = np.random.default_rng(seed)
    features = rng.normal(0.0, 1.0, (n, d))
    labels = np.zeros(n, dtype=int)
    labels[rng.choice(n, n_minority, replace=False)] = 1
    features[labels == 1] += 0.5
    return features, labels


def _brute_force_tomek(features, labels):
    nearest = []
    for i in range(len(labels)):
        best, best_dist = None, np.inf
        for j in range(len(labels)):
            dist = float(np.sum((features[i] - features[j]) ** 2))
            if j != i and dist < best_dist:
                best, best_dist = j, dist
        nearest.append(best)
    return [(i, j) for i, j in enumerate(nearest) if i < j and nearest[j] == i and labels[i] != labels[j]]


def _on_parent_segment(point, parents):
    for origin in parents:
        for target in parents:
            span = target - origin
            axis = int(np.argmax(np.abs(span)))
            if span[axis] == 0:
                continue
            step = (point[axis] - origin[axis]) / span[axis]
            if -1e-12 <= step <= 1.0 + 1e-12 and np.allclose(origin + step * span, point, atol=1e-9):
                return True
    return False


class TestStageRng:
    def test_same_seed_and_stage_repeat(self):
        assert stage_rng(7, "SMOTE").random() == stage_rng(7, "SMOTE").random()

    def test_stages_are_independent_streams(self):
        assert stage_rng(7, "SMOTE").random() != stage_rng(7, "mixup").random()


class TestInformationGain:
    def test_perfect_predictor(self):
        assert information_gain([0, 0, 1, 1], [0, 0, 1, 1]) == pytest.approx(1.0)

    def test_constant_feature(self):
        assert information_gain([5, 5, 5, 5], [0, 0, 1, 1]) == 0.0

    def test_partial_information(self):
        assert information_gain([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(0.3113, abs=1e-4)

    def test_bounded_by_label_entropy(self):
        features, labels = blob_arrays()
        for j in range(features.shape[1]):
            assert 0.0 <= information_gain(features[:, j], labels) <= 1.0 + 1e-12

    def test_binary_max_on_separating_feature(self):
        assert binary_infgain([1, 2, 3, 4], [0, 0, 1, 1], "max") == pytest.approx(1.0)

    def test_binary_mean_over_thresholds(self):
        assert binary_infgain([1, 2, 3, 4], [0, 0, 1, 1], "mean") == pytest.approx(0.5409, abs=1e-4)

    @pytest.mark.parametrize("mode", ["max", "mean"])
    def test_binary_constant_feature(self, mode):
        assert binary_infgain([3, 3, 3], [0, 1, 1], mode) == 0.0

    def test_binary_unknown_mode(self):
        with pytest.raises(TransformError):
            binary_infgain([1, 2], [0, 1], "median")


class TestSelectFeatures:
    def _dataset(self):
        features, labels = blob_arrays()
        return make_dataset(np.column_stack([labels, features[:, 2], features[:, 0]]), labels)

    @pytest.mark.parametrize("method", ["infgain", "biMaxInfgain", "biMeanInfgain"])
    def test_label_copy_ranked_first(self, method):
        assert select_features(self._dataset(), method, 1).selected == (0,)

    def test_k_equal_to_width_is_permutation(self):
        ranking = select_features(self._dataset(), "infgain", 3)
        assert sorted(ranking.selected) == [0, 1, 2]

    def test_ties_go_to_lower_index(self):
        labels = np.array([0, 1] * 5)
        ds = make_dataset(np.column_stack([np.zeros(10), labels, labels]), labels)
        assert select_features(ds, "infgain", 2).selected == (1, 2)

    @pytest.mark.parametrize("method", ["infgain", "biMaxInfgain", "biMeanInfgain"])
    def test_smaller_k_is_prefix_of_larger_k(self, method):
        rng = np.random.default_rng(3)
        labels = rng.integers(0, 2, 60)
        features = rng.normal(size=(60, 6)) + labels[:, np.newaxis] * rng.uniform(0.0, 1.0, 6)
        ds = make_dataset(features, labels)
        full = select_features(ds, method, 6).selected
        for k in range(1, 6):
            assert select_features(ds, method, k).selected == full[:k]

    def test_no_select_keeps_every_column(self):
        ranking = select_features(self._dataset(), "noSelect", "all")
        assert ranking.selected == (0, 1, 2)

    @pytest.mark.parametrize("k", [0, 4])
    def test_k_out_of_range(self, k):
        with pytest.raises(TransformError):
            select_features(self._dataset(), "infgain", k)

    def test_apply_checks_width(self):
        ranking = select_features(self._dataset(), "infgain", 2)
        assert ranking.apply(np.ones((4, 3))).shape == (4, 2)
        with pytest.raises(TransformError):
            ranking.apply(np.ones((4, 5)))


class TestScalers:
    def test_minmax(self):
        x = np.array([[1.0], [2.0], [3.0]])
        assert apply_scaler(fit_scaler(x, "minmax"), x)[:, 0].tolist() == [0.0, 0.5, 1.0]

    def test_standard_uses_population_sigma(self):
        x = np.array([[1.0], [2.0], [3.0]])
        scaled = apply_scaler(fit_scaler(x, "standard"), x)[:, 0]
        assert scaled == pytest.approx([-1.2247, 0.0, 1.2247], abs=1e-4)

    @pytest.mark.parametrize("method", ["standard", "minmax"])
    def test_constant_column_maps_to_zero(self, method):
        x = np.array([[4.0, 1.0], [4.0, 2.0]])
        params = fit_scaler(x, method)
        assert apply_scaler(params, np.array([[4.0, 1.5], [9.0, 1.5]]))[:, 0].tolist() == [0.0, 0.0]

    def test_test_rows_use_training_statistics(self):
        params = fit_scaler(np.array([[0.0], [10.0]]), "minmax")
        assert apply_scaler(params, np.array([[20.0]]))[0, 0] == 2.0

    def test_width_mismatch(self):
        params = fit_scaler(np.ones((3, 2)), "standard")
        with pytest.raises(TransformError):
            apply_scaler(params, np.ones((3, 3)))

    def test_unknown_scaler(self):
        with pytest.raises(TransformError):
            fit_scaler(np.ones((3, 2)), "robust")


class TestAugmentation:
    def test_zero_noise_duplicates_rows(self):
        features, labels = blob_arrays()
        result = gaussian_noise(features, labels, noise_scale=0.0, seed=1)
        assert result.n_rows == 2 * len(labels)
        assert np.array_equal(result.features[len(labels):], features)
        assert result.provenance[1] == {"original": 30, "synthetic": 30, "removed": 0}

    def test_noise_is_deterministic(self):
        features, labels = blob_arrays()
        a = gaussian_noise(features, labels, 0.05, seed=3)
        b = gaussian_noise(features, labels, 0.05, seed=3)
        assert np.array_equal(a.features, b.features)

    def test_noise_sigma_follows_column_sigma(self):
        rng = np.random.default_rng(11)
        features = np.column_stack([rng.normal(0.0, 1.0, 10_000), rng.normal(3.0, 5.0, 10_000)])
        labels = np.arange(10_000) % 2
        result = gaussian_noise(features, labels, noise_scale=0.1, seed=5)
        noise = result.features[10_000:] - features
        expected_sigma = 0.1 * features.std(axis=0)
        assert noise.std(axis=0) == pytest.approx(expected_sigma, rel=0.05)
        assert np.all(np.abs(noise.mean(axis=0)) < 0.05 * expected_sigma)
        assert np.array_equal(result.labels[10_000:], labels)

    def test_fractional_ratio(self):
        features, labels = blob_arrays()
        result = gaussian_noise(features, labels, 0.05, seed=3, ratio=0.5)
        assert result.n_rows == len(labels) + 30

    def test_interpolation_midpoint(self):
        assert interpolate(np.array([[0.0, 2.0]]), np.array([[2.0, 4.0]]), 0.5).tolist() == [[1.0, 3.0]]

    def test_interpolation_full_step_returns_target(self):
        assert interpolate(np.array([[0.0, 2.0]]), np.array([[2.0, 4.0]]), [1.0]).tolist() == [[2.0, 4.0]]

    def test_mixup_stays_within_class_hull(self):
        features = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
        labels = np.array([0, 0, 0, 1, 1, 1])
        result = mixup(features, labels, alpha=0.4, seed=9)
        synthetic = result.features[6:, 0]
        synthetic_labels = result.labels[6:]
        assert synthetic_labels.tolist() == labels.tolist()
        assert np.all(synthetic[synthetic_labels == 0] <= 2.0)
        assert np.all(synthetic[synthetic_labels == 1] >= 10.0)

    def test_mixup_single_member_class(self):
        with pytest.raises(TransformError):
            mixup(np.array([[0.0], [1.0], [2.0]]), np.array([0, 0, 1]), 0.4, seed=1)

    def test_dispatch(self):
        features, labels = blob_arrays()
        assert augment("noAug", features, labels, seed=1).n_rows == len(labels)
        with pytest.raises(TransformError):
            augment("cutout", features, labels, seed=1)


class TestNeighbors:
    def test_self_excluded_and_ties_to_lower_index(self):
        points = np.array([[0.0], [1.0], [-1.0]])
        assert nearest_neighbors(points, 1)[:, 0].tolist() == [1, 0, 0]

    def test_reference_set(self):
        neighbors = nearest_neighbors(np.array([[0.0]]), 2, reference=np.array([[5.0], [1.0], [2.0]]))
        assert neighbors.tolist() == [[1, 2]]


class TestImbalance:
    @pytest.mark.parametrize("method", ["SMOTE", "ADASYN", "RandomUnderSampler"])
    def test_balanced_input_adds_or_removes_nothing(self, method):
        features, labels = blob_arrays()
        result = rebalance(method, features, labels, seed=1)
        assert result.n_rows == len(labels)

    def test_smote_on_collinear_minority(self):
        majority = np.array([[10.0, 10.0], [11.0, 10.0], [10.0, 11.0], [11.0, 11.0], [12.0, 12.0]])
        features = np.vstack([majority, [[0.0, 0.0], [1.0, 1.0]]])
        labels = np.array([0, 0, 0, 0, 0, 1, 1])
        result = smote(features, labels, k_neighbors=1, seed=4)
        synthetic = result.features[7:]
        assert len(synthetic) == 3
        assert np.allclose(synthetic[:, 0], synthetic[:, 1])
        assert np.all((synthetic >= 0.0) & (synthetic <= 1.0))
        assert result.provenance[1]["synthetic"] == 3

    def test_smote_balances_classes(self):
        features, labels = _imbalanced_blobs()
        result = smote(features, labels, k_neighbors=5, seed=2)
        assert np.bincount(result.labels).tolist() == [30, 30]

    def test_smote_needs_two_minority_rows(self):
        with pytest.raises(TransformError):
            smote(np.array([[0.0], [1.0], [2.0]]), np.array([0, 0, 1]), 5, seed=1)

    def test_adasyn_uniform_when_no_majority_neighbors(self):
        features, labels = _imbalanced_blobs()
        result = adasyn(features, labels, k_neighbors=5, seed=2)
        assert np.bincount(result.labels).tolist() == [30, 30]
        assert result.provenance[1]["synthetic"] == 20

    def test_random_undersample(self):
        features, labels = _imbalanced_blobs()
        result = random_undersample(features, labels, seed=2)
        assert np.bincount(result.labels).tolist() == [10, 10]
        assert np.array_equal(result.features[result.labels == 1], features[labels == 1])
        assert result.provenance[0]["removed"] == 20

    def test_separated_clusters_have_no_tomek_links(self):
        features, labels = _imbalanced_blobs()
        assert tomek_pairs(features, labels) == []
        assert tomek_links(features, labels).n_rows == len(labels)

    def test_tomek_removes_majority_member(self):
        features = np.array([[10.0, 0.0], [11.0, 0.0], [12.0, 0.0], [0.1, 0.0], [0.0, 0.0], [20.0, 20.0]])
        labels = np.array([0, 0, 0, 0, 1, 1])
        assert tomek_pairs(features, labels) == [(3, 4)]
        result = tomek_links(features, labels)
        assert result.n_rows == 5
        assert result.provenance[0]["removed"] == 1
        assert [0.1, 0.0] not in result.features.tolist()

    def test_tomek_count_tie_removes_class_zero(self):
        features = np.array([[0.0], [0.1], [10.0], [20.0]])
        labels = np.array([0, 1, 1, 0])
        result = tomek_links(features, labels)
        assert result.features[:, 0].tolist() == [0.1, 10.0, 20.0]

    @pytest.mark.parametrize("seed", range(20))
    def test_tomek_matches_mutual_nearest_neighbor_oracle(self, seed):
        features, labels = _mixed_classes(seed, n=50, d=2, n_minority=20)
        pairs = _brute_force_tomek(features, labels)
        assert tomek_pairs(features, labels) == pairs

        keep = np.ones(50, dtype=bool)
        for i, j in pairs:
            keep[i if labels[i] == 0 else j] = False
        result = tomek_links(features, labels)
        assert np.array_equal(result.features, features[keep])
        assert result.provenance[0]["removed"] == len(pairs)

    @pytest.mark.parametrize("method", ["SMOTE", "ADASYN", "RandomUnderSampler", "TomekLinks"])
    @pytest.mark.parametrize("seed", [0, 7, 126])
    def test_rerun_is_bit_identical(self, method, seed):
        features, labels = _mixed_classes(seed)
        first = rebalance(method, features, labels, seed=seed)
        second = rebalance(method, features, labels, seed=seed)
        assert np.array_equal(first.features, second.features)
        assert np.array_equal(first.labels, second.labels)
        assert first.provenance == second.provenance

    @pytest.mark.parametrize("method", ["SMOTE", "ADASYN"])
    @pytest.mark.parametrize("seed", range(5))
    def test_synthetic_rows_lie_between_minority_parents(self, method, seed):
        features, labels = _mixed_classes(seed, n=40, d=3, n_minority=12)
        result = rebalance(method, features, labels, seed=seed)
        synthetic = result.features[len(labels):]
        assert len(synthetic) > 0
        parents = features[labels == 1]
        assert all(_on_parent_segment(point, parents) for point in synthetic)

    def test_adasyn_weight_zero_inside_minority_cluster(self):
        majority = [[10.1, 0.0], [10.0, 0.1], [9.9, 0.0], [10.0, -0.1], [20.0, 20.0], [21.0, 20.0]]
        minority = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [0.1, 0.1], [10.0, 0.0]]
        features = np.array(majority + minority)
        labels = np.array([0] * 6 + [1] * 5)
        assert adasyn_weights(features, labels, minority=1, k_neighbors=3).tolist() == [0.0, 0.0, 0.0, 0.0, 1.0]
        assert adasyn(features, labels, k_neighbors=3, seed=1).provenance[1]["synthetic"] == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_adasyn_weighted_counts_within_rounding_slack(self, seed):
        features, labels = _mixed_classes(seed)  # 48 negatives, 32 positives
        weights = adasyn_weights(features, labels, minority=1, k_neighbors=5)
        assert weights.sum() == pytest.approx(1.0)
        assert np.ptp(weights) > 0

        result = adasyn(features, labels, k_neighbors=5, seed=seed)
        counts = np.bincount(result.labels)
        assert counts[0] == 48
        assert abs(int(counts[1]) - 48) <= 32
        assert result.provenance[1]["synthetic"] == int(np.floor(16 * weights + 0.5).sum())

    def test_single_class_rejected(self):
        with pytest.raises(TransformError):
            rebalance("SMOTE", np.ones((3, 1)), np.zeros(3, dtype=int), seed=1)

    def test_unknown_method(self):
        features, labels = blob_arrays()
        with pytest.raises(TransformError):
            rebalance("NearMiss", features, labels, seed=1)


class TestSettings:
    @pytest.mark.parametrize(
        "field,value",
        [("ig_bins", 0), ("noise_scale", -1.0), ("augment_ratio", 0.0), ("mixup_alpha", 0.0), ("k_neighbors", 0)],
    )
    def test_invalid_values(self, field, value):
        with pytest.raises(TransformError):
            TransformSettings(**{field: value})
