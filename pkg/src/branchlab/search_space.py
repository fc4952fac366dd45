# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Configuration-space grammar and deterministic branch enumeration.

A search space is the Cartesian product of ten dimensions (feature
selection, feature count, scaler, normalization order, augmentation,
imbalance handling, model, split ratio, probability threshold, seed).
Every point of it is a branch; this module enumerates branches in a fixed
order and derives their identifiers, LogDir paths and cache signatures.

Enumeration order, outermost first:
    k, fs_method, scaler, norm_first, augmentation, imbalance, model,
    split_ratio, prob_threshold, seed

`noSelect` collapses the k dimension to the sentinel "all": its branches
are enumerated once, after every numeric k.
"""

from __future__ import annotations

import itertools
import math
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, replace

from .config_loader import ConfigError

ALL_FEATURES = "all"
NO_SELECT = "noSelect"

FS_METHODS = ("infgain", "biMaxInfgain", "biMeanInfgain", NO_SELECT)
SCALERS = ("standard", "minmax")
AUGMENTATIONS = ("noAug", "gaussian_noise", "mixup")
IMBALANCE_METHODS = ("noImbl", "SMOTE", "ADASYN", "RandomUnderSampler", "TomekLinks")

# short id -> LogDir name
MODEL_LOGDIR_NAMES = {
    "LR": "LogisticRegression",
    "SVM": "sklearn_SVM",
    "DT": "DTmodel",
    "RF": "random_forest",
    "GB": "GradientBoosting",
    "XGB": "XGBmodel",
}
MODEL_IDS = tuple(MODEL_LOGDIR_NAMES)
_MODEL_ALIASES = {**{v: k for k, v in MODEL_LOGDIR_NAMES.items()}, **{k: k for k in MODEL_LOGDIR_NAMES}}

BRANCH_ID_SEPARATOR = "|"
STAGE_SEPARATOR = "__"
_IDENTIFIER_RE = re.compile(r"^[A-Za-z0-9_.-]+$")

# config-file keys, in reporting order
DIMENSIONS = (
    "feature_selection_methods",
    "feature_counts",
    "scalers",
    "norm_first",
    "augmentations",
    "imbalance_methods",
    "models",
    "split_ratios",
    "prob_thresholds",
    "seeds",
)


def canonical_model_id(name: str) -> str:
    """Map a short id or LogDir model name to its short id."""
    try:
        return _MODEL_ALIASES[str(name)]
    except KeyError:
        raise ConfigError("models", f"unknown model {name!r} (known: {', '.join(MODEL_IDS)})") from None


def format_fraction(value: float) -> str:
    """Two decimals when exact, full repr otherwise (keeps ids injective)."""
    short = f"{value:.2f}"
    return short if float(short) == float(value) else repr(float(value))


@dataclass(frozen=True)
class PipelineConfig:
    """One branch: one value per search-space dimension."""

    fs_method: str
    k: int | str
    scaler: str
    norm_first: bool
    augmentation: str
    imbalance: str
    model: str
    split_ratio: float
    prob_threshold: float
    seed: int

    @property
    def norm_token(self) -> str:
        return "normfirst" if self.norm_first else "normlast"

    def stage_tokens(self) -> tuple[str, str, str]:
        """Scaler, augmentation and imbalance in training execution order."""
        if self.norm_first:
            return (self.scaler, self.augmentation, self.imbalance)
        return (self.augmentation, self.imbalance, self.scaler)

    def to_dict(self) -> dict:
        return {
            "fs_method": self.fs_method,
            "k": self.k,
            "scaler": self.scaler,
            "norm_first": self.norm_first,
            "augmentation": self.augmentation,
            "imbalance": self.imbalance,
            "model": self.model,
            "split_ratio": self.split_ratio,
            "prob_threshold": self.prob_threshold,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> PipelineConfig:
        k = data["k"]
        return cls(
            fs_method=str(data["fs_method"]),
            k=ALL_FEATURES if k == ALL_FEATURES else int(k),
            scaler=str(data["scaler"]),
            norm_first=bool(data["norm_first"]),
            augmentation=str(data["augmentation"]),
            imbalance=str(data["imbalance"]),
            model=canonical_model_id(data["model"]),
            split_ratio=float(data["split_ratio"]),
            prob_threshold=float(data["prob_threshold"]),
            seed=int(data["seed"]),
        )


@dataclass(frozen=True)
class BranchAddress:
    run_id: str
    logdir: str
    branch_id: str


def _as_tuple(values, name: str) -> tuple:
    if values is None:
        raise ConfigError(name, f"dimension '{name}' is missing")
    if isinstance(values, (str, bytes)) or not isinstance(values, Iterable):
        values = [values]
    values = tuple(values)
    if not values:
        raise ConfigError(name, f"dimension '{name}' is empty")
    return values


def _dedupe(values: Sequence) -> tuple:
    seen = []
    for value in values:
        if value not in seen:
            seen.append(value)
    return tuple(seen)


def _coerce_bool(value, name: str) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("true", "yes", "1", "first", "normfirst"):
        return True
    if text in ("false", "no", "0", "last", "normlast"):
        return False
    raise ConfigError(name, f"'{name}' value {value!r} is not a boolean")


def _check_members(values: tuple, allowed: tuple, name: str) -> None:
    unknown = [v for v in values if v not in allowed]
    if unknown:
        raise ConfigError(name, f"'{name}' has unknown value(s) {unknown} (allowed: {', '.join(allowed)})")


def _check_fractions(values: tuple, name: str) -> tuple[float, ...]:
    fractions = []
    for value in values:
        try:
            fraction = float(value)
        except (TypeError, ValueError):
            raise ConfigError(name, f"'{name}' value {value!r} is not a number") from None
        if not 0.0 < fraction < 1.0:
            raise ConfigError(name, f"'{name}' value {fraction} is outside (0, 1)")
        fractions.append(fraction)
    return tuple(fractions)


@dataclass(frozen=True)
class SearchSpaceSpec:
    """The ten value sets, each in its declared order."""

    feature_selection_methods: tuple[str, ...]
    feature_counts: tuple[int | str, ...]
    scalers: tuple[str, ...]
    norm_first: tuple[bool, ...]
    augmentations: tuple[str, ...]
    imbalance_methods: tuple[str, ...]
    models: tuple[str, ...]
    split_ratios: tuple[float, ...]
    prob_thresholds: tuple[float, ...]
    seeds: tuple[int, ...]

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> SearchSpaceSpec:
        """Build a spec from the `search_space` section of a config file."""
        if not isinstance(mapping, Mapping):
            raise ConfigError("search_space", "'search_space' must be a mapping of dimension -> values")
        unknown = sorted(set(mapping) - set(DIMENSIONS))
        if unknown:
            raise ConfigError(unknown[0], f"unknown search-space dimension(s): {', '.join(unknown)}")

        raw = {name: _as_tuple(mapping.get(name), name) for name in DIMENSIONS}

        counts = []
        for value in raw["feature_counts"]:
            if str(value).strip().lower() == ALL_FEATURES:
                counts.append(ALL_FEATURES)
                continue
            try:
                counts.append(int(value))
            except (TypeError, ValueError):
                raise ConfigError("feature_counts", f"'feature_counts' value {value!r} is not an integer") from None

        seeds = []
        for value in raw["seeds"]:
            try:
                seeds.append(int(value))
            except (TypeError, ValueError):
                raise ConfigError("seeds", f"'seeds' value {value!r} is not an integer") from None

        return cls(
            feature_selection_methods=_dedupe(str(v) for v in raw["feature_selection_methods"]),
            feature_counts=_dedupe(counts),
            scalers=_dedupe(str(v) for v in raw["scalers"]),
            norm_first=_dedupe(_coerce_bool(v, "norm_first") for v in raw["norm_first"]),
            augmentations=_dedupe(str(v) for v in raw["augmentations"]),
            imbalance_methods=_dedupe(str(v) for v in raw["imbalance_methods"]),
            models=_dedupe(canonical_model_id(v) for v in raw["models"]),
            split_ratios=_dedupe(_check_fractions(raw["split_ratios"], "split_ratios")),
            prob_thresholds=_dedupe(_check_fractions(raw["prob_thresholds"], "prob_thresholds")),
            seeds=tuple(seeds),
        )

    def validate(self, feature_count: int | None = None) -> None:
        """Raise ConfigError on the first invalid dimension.

        feature_count, when known, bounds the numeric feature counts.
        """
        for name in DIMENSIONS:
            if not getattr(self, name):
                raise ConfigError(name, f"dimension '{name}' is empty")

        _check_members(self.feature_selection_methods, FS_METHODS, "feature_selection_methods")
        _check_members(self.scalers, SCALERS, "scalers")
        _check_members(self.augmentations, AUGMENTATIONS, "augmentations")
        _check_members(self.imbalance_methods, IMBALANCE_METHODS, "imbalance_methods")
        _check_members(self.models, MODEL_IDS, "models")
        _check_fractions(self.split_ratios, "split_ratios")
        _check_fractions(self.prob_thresholds, "prob_thresholds")

        selecting = [m for m in self.feature_selection_methods if m != NO_SELECT]
        numeric = [k for k in self.feature_counts if k != ALL_FEATURES]
        if ALL_FEATURES in self.feature_counts and selecting:
            raise ConfigError(
                "feature_counts",
                "'feature_counts' may only be 'all' when feature_selection_methods is just noSelect",
            )
        if selecting and not numeric:
            raise ConfigError("feature_counts", "'feature_counts' needs at least one integer k")
        for k in numeric:
            if k < 1:
                raise ConfigError("feature_counts", f"'feature_counts' value {k} is not positive")
            if feature_count is not None and k > feature_count:
                raise ConfigError(
                    "feature_counts",
                    f"'feature_counts' value {k} exceeds the dataset's {feature_count} features",
                )

        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds", "'seeds' must be non-negative")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds", "'seeds' contains duplicates")

    @property
    def numeric_feature_counts(self) -> tuple[int, ...]:
        return tuple(k for k in self.feature_counts if k != ALL_FEATURES)

    def with_seeds(self, seeds: Sequence[int]) -> SearchSpaceSpec:
        """Copy of this spec with the seed dimension replaced."""
        return replace(self, seeds=tuple(int(s) for s in seeds))


def effective_size(spec: SearchSpaceSpec) -> int:
    """Exact branch count without enumerating."""
    selecting = sum(1 for m in spec.feature_selection_methods if m != NO_SELECT)
    data_paths = selecting * len(spec.numeric_feature_counts)
    if NO_SELECT in spec.feature_selection_methods:
        data_paths += 1
    return data_paths * math.prod(
        len(getattr(spec, name))
        for name in (
            "scalers",
            "norm_first",
            "augmentations",
            "imbalance_methods",
            "models",
            "split_ratios",
            "prob_thresholds",
            "seeds",
        )
    )


def _selection_prefixes(spec: SearchSpaceSpec) -> list[tuple[int | str, str]]:
    """(k, fs_method) pairs: numeric k outer, methods in declared order.

    (all, noSelect) has no k of its own, so it always comes last, whatever
    position noSelect holds in feature_selection_methods.
    """
    prefixes = [
        (k, method)
        for k in spec.numeric_feature_counts
        for method in spec.feature_selection_methods
        if method != NO_SELECT
    ]
    if NO_SELECT in spec.feature_selection_methods:
        prefixes.append((ALL_FEATURES, NO_SELECT))
    return prefixes


def enumerate_branches(spec: SearchSpaceSpec) -> list[PipelineConfig]:
    """Every branch of the search space, in the canonical lexicographic order."""
    spec.validate()
    branches = []
    for (k, method), rest in itertools.product(
        _selection_prefixes(spec),
        itertools.product(
            spec.scalers,
            spec.norm_first,
            spec.augmentations,
            spec.imbalance_methods,
            spec.models,
            spec.split_ratios,
            spec.prob_thresholds,
            spec.seeds,
        ),
    ):
        scaler, norm_first, augmentation, imbalance, model, split_ratio, threshold, seed = rest
        branches.append(
            PipelineConfig(
                fs_method=method,
                k=k,
                scaler=scaler,
                norm_first=norm_first,
                augmentation=augmentation,
                imbalance=imbalance,
                model=model,
                split_ratio=split_ratio,
                prob_threshold=threshold,
                seed=seed,
            )
        )
    return branches


def _tokens(config: PipelineConfig) -> list[str]:
    return [
        str(config.k),
        config.fs_method,
        config.scaler,
        config.norm_token,
        config.augmentation,
        config.imbalance,
        config.model,
        format_fraction(config.split_ratio),
        format_fraction(config.prob_threshold),
        str(config.seed),
    ]


def branch_id(config: PipelineConfig) -> str:
    """Canonical, process-independent identifier of a branch.

    e.g. "6|biMaxInfgain|standard|normlast|noAug|TomekLinks|XGB|0.10|0.35|126"
    """
    tokens = _tokens(config)
    for token in tokens:
        if not _IDENTIFIER_RE.match(token):
            raise ConfigError("branch_id", f"identifier {token!r} contains characters outside [A-Za-z0-9_.-]")
    return BRANCH_ID_SEPARATOR.join(tokens)


def logdir_path(config: PipelineConfig) -> str:
    """e.g. "6/biMaxInfgain/noAug__TomekLinks__standard/XGBmodel"."""
    return "/".join(
        [
            str(config.k),
            config.fs_method,
            STAGE_SEPARATOR.join(config.stage_tokens()),
            MODEL_LOGDIR_NAMES[config.model],
        ]
    )


def data_collection_key(config: PipelineConfig) -> str:
    """Signature of everything that shapes the processed split.

    Model and probability threshold are left out: branches differing only
    in those share one data-branch collection.
    """
    tokens = _tokens(config)
    del tokens[8]  # prob_threshold
    del tokens[6]  # model
    return BRANCH_ID_SEPARATOR.join(tokens)


def branch_address(run_id: str, config: PipelineConfig) -> BranchAddress:
    return BranchAddress(run_id=run_id, logdir=logdir_path(config), branch_id=branch_id(config))


def group_by_collection(configs: Iterable[PipelineConfig]) -> dict[str, list[PipelineConfig]]:
    """Ordered mapping of data_collection_key -> member branches."""
    groups: dict[str, list[PipelineConfig]] = {}
    for config in configs:
        groups.setdefault(data_collection_key(config), []).append(config)
    return groups
