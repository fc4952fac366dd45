# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Data-side pipeline stages: feature selection, scaling, augmentation and
imbalance handling.

Every stochastic stage owns a generator derived from (branch seed, stage
name) through `stage_rng`; nothing here touches global random state, so
stages are safe to run concurrently across branches.

Stage identifiers:
    selection:   infgain, biMaxInfgain, biMeanInfgain, noSelect
    scaling:     standard, minmax
    augmentation: noAug, gaussian_noise, mixup
    imbalance:   noImbl, SMOTE, ADASYN, RandomUnderSampler, TomekLinks
"""

from __future__ import annotations

import math
import zlib
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.spatial.distance import cdist

if TYPE_CHECKING:
    from .dataset import TabularDataset

DEFAULT_IG_BINS = 10
_NEIGHBOR_CHUNK = 1024


class TransformError(Exception):
    """A pipeline stage cannot run on its input; `stage` names the stage."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


@dataclass(frozen=True)
class TransformSettings:
    ig_bins: int = DEFAULT_IG_BINS
    noise_scale: float = 0.05
    augment_ratio: float = 1.0
    mixup_alpha: float = 0.4
    k_neighbors: int = 5

    def __post_init__(self):
        if self.ig_bins < 1:
            raise TransformError("settings", f"ig_bins must be positive, got {self.ig_bins}")
        if self.noise_scale < 0:
            raise TransformError("settings", f"noise_scale must be non-negative, got {self.noise_scale}")
        if self.augment_ratio <= 0:
            raise TransformError("settings", f"augment_ratio must be positive, got {self.augment_ratio}")
        if self.mixup_alpha <= 0:
            raise TransformError("settings", f"mixup_alpha must be positive, got {self.mixup_alpha}")
        if self.k_neighbors < 1:
            raise TransformError("settings", f"k_neighbors must be positive, got {self.k_neighbors}")


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Generator owned by one stage of one branch."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(stage.encode("utf-8"))]))


# =============================================================================
# FEATURE SELECTION
# =============================================================================


def _entropy_from_counts(positives: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Binary entropy in bits, elementwise; empty groups have entropy 0."""
    totals = np.asarray(totals, dtype=float)
    positives = np.asarray(positives, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, positives / totals, 0.0)
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return np.where(totals > 0, h, 0.0)


def _label_entropy(y: np.ndarray) -> float:
    return float(_entropy_from_counts(np.sum(y == 1), len(y)))


def _equal_frequency_codes(x: np.ndarray, bins: int) -> np.ndarray:
    values = np.unique(x)
    if len(values) <= bins:
        return np.searchsorted(values, x)
    edges = np.unique(np.quantile(x, np.linspace(0.0, 1.0, bins + 1)[1:-1]))
    return np.searchsorted(edges, x, side="right")


def information_gain(x: Sequence[float], y: Sequence[int], bins: int = DEFAULT_IG_BINS) -> float:
    """IG(Y, X) in bits with X cut into at most `bins` equal-frequency bins."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    h_y = _label_entropy(y)
    codes = _equal_frequency_codes(x, bins)
    totals = np.bincount(codes)
    positives = np.bincount(codes, weights=(y == 1).astype(float), minlength=len(totals))
    h_cond = float(np.sum(totals / len(y) * _entropy_from_counts(positives, totals)))
    return float(min(max(h_y - h_cond, 0.0), h_y))


def binary_infgain(x: Sequence[float], y: Sequence[int], mode: str = "max") -> float:
    """IG of [x > t] over every midpoint threshold t, reduced by max or mean."""
    if mode not in ("max", "mean"):
        raise TransformError("binary_infgain", f"mode must be 'max' or 'mean', got {mode!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    n = len(y)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = (y[order] == 1).astype(float)
    cut = np.flatnonzero(xs[:-1] < xs[1:])
    if cut.size == 0:
        return 0.0

    h_y = _label_entropy(y)
    left_n = cut + 1.0
    left_pos = np.cumsum(ys)[cut]
    right_n = n - left_n
    right_pos = ys.sum() - left_pos
    h_cond = (left_n * _entropy_from_counts(left_pos, left_n) + right_n * _entropy_from_counts(right_pos, right_n)) / n
    gains = np.clip(h_y - h_cond, 0.0, h_y)
    return float(gains.max() if mode == "max" else gains.mean())


@dataclass(frozen=True, eq=False)
class FeatureRanking:
    """Per-column scores and the selected columns, best first."""

    method: str
    scores: np.ndarray
    selected: tuple[int, ...]

    def apply(self, features: np.ndarray) -> np.ndarray:
        if features.shape[1] != len(self.scores):
            raise TransformError(
                "select_features",
                f"ranking fit on {len(self.scores)} columns, applied to {features.shape[1]}",
            )
        return features[:, list(self.selected)]


_SCORERS = {
    "infgain": lambda x, y, bins: information_gain(x, y, bins),
    "biMaxInfgain": lambda x, y, bins: binary_infgain(x, y, "max"),
    "biMeanInfgain": lambda x, y, bins: binary_infgain(x, y, "mean"),
}


def select_features(
    train: TabularDataset,
    method: str,
    k: int | str,
    bins: int = DEFAULT_IG_BINS,
) -> FeatureRanking:
    """Rank columns on training rows; ties go to the lower column index."""
    d = train.n_features
    if method == "noSelect":
        return FeatureRanking(method=method, scores=np.zeros(d), selected=tuple(range(d)))
    if method not in _SCORERS:
        raise TransformError("select_features", f"unknown selection method {method!r}")
    if isinstance(k, str) or not 1 <= k <= d:
        raise TransformError("select_features", f"k={k} is outside [1, {d}]")

    scorer = _SCORERS[method]
    scores = np.array([scorer(train.features[:, j], train.labels, bins) for j in range(d)])
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(method=method, scores=scores, selected=tuple(int(j) for j in order[:k]))


# =============================================================================
# SCALING
# =============================================================================


@dataclass(frozen=True, eq=False)
class ScalerParams:
    """Training statistics: (mu, sigma) for standard, (x_min, x_max) for minmax."""

    method: str
    first: np.ndarray
    second: np.ndarray

    def _offset_and_span(self) -> tuple[np.ndarray, np.ndarray]:
        if self.method == "standard":
            return self.first, self.second
        return self.first, self.second - self.first


def fit_scaler(features: np.ndarray, method: str) -> ScalerParams:
    features = np.asarray(features, dtype=float)
    if method == "standard":
        return ScalerParams(method, features.mean(axis=0), features.std(axis=0))
    if method == "minmax":
        return ScalerParams(method, features.min(axis=0), features.max(axis=0))
    raise TransformError("scaler", f"unknown scaler {method!r}")


def apply_scaler(params: ScalerParams, features: np.ndarray) -> np.ndarray:
    """Constant training columns map to zeros."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != len(params.first):
        raise TransformError(
            "scaler",
            f"scaler fit on {len(params.first)} columns, applied to shape {features.shape}",
        )
    offset, span = params._offset_and_span()
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (features - offset) / safe, 0.0)


# =============================================================================
# RESAMPLING
# =============================================================================


@dataclass(frozen=True, eq=False)
class ResampleResult:
    """Post-stage training set.

    provenance[c] = {"original": n, "synthetic": s, "removed": r} and
    count(label == c) == n - r + s.
    """

    features: np.ndarray
    labels: np.ndarray
    provenance: dict[int, dict[str, int]]

    @property
    def n_rows(self) -> int:
        return len(self.labels)


def _counts(labels: np.ndarray) -> dict[int, int]:
    return {c: int(np.sum(labels == c)) for c in (0, 1)}


def _result(
    features: np.ndarray,
    labels: np.ndarray,
    original: np.ndarray,
    synthetic: np.ndarray | None = None,
    removed: np.ndarray | None = None,
) -> ResampleResult:
    empty = np.zeros(0, dtype=int)
    orig = _counts(original)
    synth = _counts(empty if synthetic is None else synthetic)
    gone = _counts(empty if removed is None else removed)
    provenance = {c: {"original": orig[c], "synthetic": synth[c], "removed": gone[c]} for c in (0, 1)}
    return ResampleResult(features=np.asarray(features, dtype=float), labels=np.asarray(labels, dtype=int),
                          provenance=provenance)


def identity(features: np.ndarray, labels: np.ndarray) -> ResampleResult:
    return _result(np.array(features, dtype=float, copy=True), np.array(labels, dtype=int, copy=True), labels)


def _require_both_classes(labels: np.ndarray, stage: str) -> dict[int, int]:
    counts = _counts(labels)
    if min(counts.values()) == 0:
        raise TransformError(stage, "training data contains a single class")
    return counts


def _append(features, labels, new_features, new_labels) -> ResampleResult:
    new_labels = np.asarray(new_labels, dtype=int)
    return _result(
        np.vstack([features, np.asarray(new_features, dtype=float).reshape(-1, features.shape[1])]),
        np.concatenate([labels, new_labels]),
        labels,
        synthetic=new_labels,
    )


def _anchor_rows(n: int, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Whole passes over every row, then a sorted random remainder."""
    whole = int(math.floor(ratio))
    extra = int(math.floor((ratio - whole) * n + 0.5))
    rows = [np.tile(np.arange(n), whole)]
    if extra:
        rows.append(np.sort(rng.choice(n, size=min(extra, n), replace=False)))
    return np.concatenate(rows).astype(int)


def interpolate(origin: np.ndarray, target: np.ndarray, step) -> np.ndarray:
    """origin + step * (target - origin); step broadcasts per row."""
    step = np.asarray(step, dtype=float)
    if step.ndim == 1:
        step = step[:, np.newaxis]
    return origin + step * (target - origin)


def gaussian_noise(
    features: np.ndarray,
    labels: np.ndarray,
    noise_scale: float,
    seed: int,
    ratio: float = 1.0,
) -> ResampleResult:
    """Append noisy copies: x + N(0, (noise_scale * sigma_col)^2)."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if len(labels) == 0:
        raise TransformError("gaussian_noise", "training data is empty")
    rng = stage_rng(seed, "gaussian_noise")
    rows = _anchor_rows(len(labels), ratio, rng)
    sigma = features.std(axis=0) * noise_scale
    noise = rng.standard_normal((len(rows), features.shape[1])) * sigma
    return _append(features, labels, features[rows] + noise, labels[rows])


def mixup(
    features: np.ndarray,
    labels: np.ndarray,
    alpha: float,
    seed: int,
    ratio: float = 1.0,
) -> ResampleResult:
    """Intra-class convex mixes lam*x_i + (1-lam)*x_j, lam ~ Beta(alpha, alpha)."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    for c, n in _counts(labels).items():
        if n == 1:
            raise TransformError("mixup", f"class {c} has a single member")
    rng = stage_rng(seed, "mixup")
    anchors = _anchor_rows(len(labels), ratio, rng)

    position = np.zeros(len(labels), dtype=int)
    members = {}
    for c in (0, 1):
        idx = np.flatnonzero(labels == c)
        members[c] = idx
        position[idx] = np.arange(len(idx))

    partners = np.empty(len(anchors), dtype=int)
    for out, i in enumerate(anchors):
        group = members[labels[i]]
        shift = rng.integers(1, len(group))
        partners[out] = group[(position[i] + shift) % len(group)]
    lam = rng.beta(alpha, alpha, size=len(anchors))
    mixed = interpolate(features[partners], features[anchors], lam)
    return _append(features, labels, mixed, labels[anchors])


def nearest_neighbors(points: np.ndarray, k: int, reference: np.ndarray | None = None) -> np.ndarray:
    """Indices of the k nearest rows of `reference` (default: points, self excluded).

    Euclidean; equal distances resolve to the lower index.
    """
    self_query = reference is None
    reference = points if self_query else reference
    result = np.empty((len(points), k), dtype=int)
    for start in range(0, len(points), _NEIGHBOR_CHUNK):
        stop = min(start + _NEIGHBOR_CHUNK, len(points))
        dist = cdist(points[start:stop], reference)
        if self_query:
            dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        result[start:stop] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return result


def _minority(labels: np.ndarray, stage: str) -> tuple[int, int, int]:
    counts = _require_both_classes(labels, stage)
    minority = 1 if counts[1] < counts[0] else 0
    return minority, counts[minority], counts[1 - minority]


def _synthesize(
    minority_rows: np.ndarray,
    anchors: np.ndarray,
    k_neighbors: int,
    rng: np.random.Generator,
) -> np.ndarray:
    k_eff = min(k_neighbors, len(minority_rows) - 1)
    neighbors = nearest_neighbors(minority_rows, k_eff)
    chosen = neighbors[anchors, rng.integers(0, k_eff, size=len(anchors))]
    gaps = rng.uniform(0.0, 1.0, size=len(anchors))
    return interpolate(minority_rows[anchors], minority_rows[chosen], gaps)


def smote(features: np.ndarray, labels: np.ndarray, k_neighbors: int, seed: int) -> ResampleResult:
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    minority, n_min, n_maj = _minority(labels, "SMOTE")
    if n_min == n_maj:
        return identity(features, labels)
    if n_min < 2:
        raise TransformError("SMOTE", f"minority class {minority} has {n_min} member(s), need at least 2")

    rng = stage_rng(seed, "SMOTE")
    rows = features[labels == minority]
    anchors = rng.integers(0, n_min, size=n_maj - n_min)
    synthetic = _synthesize(rows, anchors, k_neighbors, rng)
    return _append(features, labels, synthetic, np.full(len(anchors), minority))


def adasyn_weights(features: np.ndarray, labels: np.ndarray, minority: int, k_neighbors: int) -> np.ndarray:
    """Normalized share of majority points among each minority point's neighbors."""
    k = min(k_neighbors, len(labels) - 1)
    minority_idx = np.flatnonzero(labels == minority)
    all_neighbors = nearest_neighbors(features, k)[minority_idx]
    ratios = np.sum(labels[all_neighbors] != minority, axis=1) / k
    total = ratios.sum()
    if total == 0:
        return np.full(len(minority_idx), 1.0 / len(minority_idx))
    return ratios / total


def adasyn(features: np.ndarray, labels: np.ndarray, k_neighbors: int, seed: int) -> ResampleResult:
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    minority, n_min, n_maj = _minority(labels, "ADASYN")
    if n_min == n_maj:
        return identity(features, labels)
    if n_min < 2:
        raise TransformError("ADASYN", f"minority class {minority} has {n_min} member(s), need at least 2")

    rng = stage_rng(seed, "ADASYN")
    weights = adasyn_weights(features, labels, minority, k_neighbors)
    per_row = np.floor((n_maj - n_min) * weights + 0.5).astype(int)
    anchors = np.repeat(np.arange(n_min), per_row)
    synthetic = _synthesize(features[labels == minority], anchors, k_neighbors, rng)
    return _append(features, labels, synthetic, np.full(len(anchors), minority))


def random_undersample(features: np.ndarray, labels: np.ndarray, seed: int) -> ResampleResult:
    """Majority cut to the minority count; surviving rows keep their order."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    minority, n_min, n_maj = _minority(labels, "RandomUnderSampler")
    if n_min == n_maj:
        return identity(features, labels)

    rng = stage_rng(seed, "RandomUnderSampler")
    majority_idx = np.flatnonzero(labels != minority)
    kept = rng.choice(majority_idx, size=n_min, replace=False)
    keep = labels == minority
    keep[kept] = True
    return _result(features[keep], labels[keep], labels, removed=labels[~keep])


def tomek_pairs(features: np.ndarray, labels: np.ndarray) -> list[tuple[int, int]]:
    """Opposite-class mutual nearest neighbours as (i, j) with i < j."""
    nearest = nearest_neighbors(np.asarray(features, dtype=float), 1)[:, 0]
    pairs = []
    for i, j in enumerate(nearest):
        if i < j and nearest[j] == i and labels[i] != labels[j]:
            pairs.append((i, int(j)))
    return pairs


def tomek_links(features: np.ndarray, labels: np.ndarray) -> ResampleResult:
    """Drop the majority member of every Tomek link (class 0 on a count tie)."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    counts = _require_both_classes(labels, "TomekLinks")
    majority = 1 if counts[1] > counts[0] else 0
    keep = np.ones(len(labels), dtype=bool)
    for i, j in tomek_pairs(features, labels):
        keep[i if labels[i] == majority else j] = False
    return _result(features[keep], labels[keep], labels, removed=labels[~keep])


def augment(
    method: str,
    features: np.ndarray,
    labels: np.ndarray,
    seed: int,
    settings: TransformSettings | None = None,
) -> ResampleResult:
    settings = settings or TransformSettings()
    if method == "noAug":
        return identity(features, labels)
    if method == "gaussian_noise":
        return gaussian_noise(features, labels, settings.noise_scale, seed, settings.augment_ratio)
    if method == "mixup":
        return mixup(features, labels, settings.mixup_alpha, seed, settings.augment_ratio)
    raise TransformError("augmentation", f"unknown augmentation {method!r}")


def rebalance(
    method: str,
    features: np.ndarray,
    labels: np.ndarray,
    seed: int,
    settings: TransformSettings | None = None,
) -> ResampleResult:
    settings = settings or TransformSettings()
    if method == "noImbl":
        return identity(features, labels)
    if method == "SMOTE":
        return smote(features, labels, settings.k_neighbors, seed)
    if method == "ADASYN":
        return adasyn(features, labels, settings.k_neighbors, seed)
    if method == "RandomUnderSampler":
        return random_undersample(features, labels, seed)
    if method == "TomekLinks":
        return tomek_links(features, labels)
    raise TransformError("imbalance", f"unknown imbalance method {method!r}")
