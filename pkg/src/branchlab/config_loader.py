# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Configuration loader for branchlab.

Loads one declarative experiment file (.branchlab.yaml) that names the
dataset, the search space, the log root, the worker count and the
analysis defaults. Flags on the command line only narrow scope; they never
replace the file.

Lookup:
- explicit path (--config)
- .branchlab.yaml / .branchlab.yml / branchlab.yaml in cwd or up to four parents

Environment:
- BRANCHLAB_LOG_ROOT: log root when the file does not set one
- BRANCHLAB_DEBUG: print debug lines from long-running components
"""

from __future__ import annotations

import os
from pathlib import Path

import yaml

LOG_ROOT_ENV = "BRANCHLAB_LOG_ROOT"
DEBUG_ENV = "BRANCHLAB_DEBUG"

DEFAULT_LOG_ROOT = "logs"
DEFAULT_WORKERS = 1
DEFAULT_SCHEMA = "generic"

DEFAULT_TRANSFORM: dict[str, float | int] = {
    "ig_bins": 10,
    "noise_scale": 0.05,
    "augment_ratio": 1.0,
    "mixup_alpha": 0.4,
    "k_neighbors": 5,
}

DEFAULT_EXECUTION: dict[str, object] = {
    # on-disk spill of processed splits, keyed by data-collection signature
    "cache_dir": None,
    "dump_intermediate": False,
    "save_models": False,
}

DEFAULT_ANALYSIS: dict[str, object] = {
    "metric": "Macro_F1",
    "metrics": [
        "Accuracy",
        "Macro_Precision",
        "Macro_Recall",
        "Macro_F1",
        "Weighted_Precision",
        "Weighted_Recall",
        "Weighted_F1",
        "Micro_Precision",
        "Micro_Recall",
        "Micro_F1",
        "Integrated_Score",
    ],
    "top_n": 5,
    "nrrs_lambda": 1.0,
    "alpha": 0.05,
    "rf_trees": 100,
    "rf_seed": 0,
    "block_by": "context",
    "similarity_tolerance": 0.01,
}


def debug_enabled() -> bool:
    return bool(os.environ.get(DEBUG_ENV))


class ConfigError(Exception):
    """The experiment file (or a flag overriding it) is invalid.

    `key` names the offending setting or search-space dimension.
    """

    def __init__(self, key: str, message: str | None = None):
        self.key = key
        super().__init__(message or f"invalid configuration value for '{key}'")


class LabConfig:
    """Configuration manager for branchlab."""

    CONFIG_FILES = [".branchlab.yaml", ".branchlab.yml", "branchlab.yaml"]

    def __init__(self, config_path: str | Path | None = None, data: dict | None = None):
        if data is not None:
            self.path: Path | None = Path(config_path) if config_path else None
            self.config = data
        else:
            self.path, self.config = self._load_config(config_path)
        self._init_settings()

    def _load_config(self, config_path: str | Path | None = None) -> tuple[Path | None, dict]:
        """Load configuration from the first existing candidate file."""
        if config_path:
            search_paths = [Path(config_path)]
            if not search_paths[0].exists():
                raise ConfigError("config", f"config file {config_path} does not exist")
        else:
            current = Path.cwd()
            search_paths = []
            for _ in range(5):
                for config_name in self.CONFIG_FILES:
                    search_paths.append(current / config_name)
                current = current.parent

        for path in search_paths:
            if path.exists():
                try:
                    with open(path, "r", encoding="utf-8") as f:
                        loaded = yaml.safe_load(f) or {}
                except yaml.YAMLError as exc:
                    raise ConfigError("config", f"{path}: not valid YAML ({exc})") from exc
                if not isinstance(loaded, dict):
                    raise ConfigError("config", f"{path}: top level must be a mapping")
                return path, loaded
        return None, {}

    def _section(self, name: str, defaults: dict) -> dict:
        section = self.config.get(name) or {}
        if not isinstance(section, dict):
            raise ConfigError(name, f"'{name}' must be a mapping")
        unknown = sorted(set(section) - set(defaults))
        if unknown:
            raise ConfigError(f"{name}.{unknown[0]}", f"unknown key(s) in '{name}': {', '.join(unknown)}")
        return {**defaults, **section}

    def _resolve(self, value: str | None) -> Path | None:
        """Relative paths in the file are relative to the file itself."""
        if value is None:
            return None
        path = Path(str(value)).expanduser()
        if not path.is_absolute() and self.path is not None:
            path = self.path.parent / path
        return path

    def _init_settings(self):
        """Initialize all settings from config."""
        self.run_id: str | None = self.config.get("run_id")
        if self.run_id is not None:
            self.run_id = str(self.run_id)

        log_root = self.config.get("log_root") or os.environ.get(LOG_ROOT_ENV) or DEFAULT_LOG_ROOT
        self.log_root: Path = self._resolve(log_root)

        try:
            self.workers: int = int(self.config.get("workers", DEFAULT_WORKERS))
        except (TypeError, ValueError):
            raise ConfigError("workers", "'workers' must be a positive integer") from None
        if self.workers < 1:
            raise ConfigError("workers", "'workers' must be a positive integer")

        dataset = self.config.get("dataset") or {}
        if not isinstance(dataset, dict):
            raise ConfigError("dataset", "'dataset' must be a mapping with 'path' and 'schema'")
        self.dataset_path: Path | None = self._resolve(dataset.get("path"))
        self.dataset_schema: str = str(dataset.get("schema", DEFAULT_SCHEMA))

        self.search_space_raw: dict = self.config.get("search_space") or {}

        self.transform: dict = self._section("transform", DEFAULT_TRANSFORM)
        self.execution: dict = self._section("execution", DEFAULT_EXECUTION)
        self.analysis: dict = self._section("analysis", DEFAULT_ANALYSIS)

        models = self.config.get("models") or {}
        if not isinstance(models, dict) or not all(isinstance(v, dict) for v in models.values()):
            raise ConfigError("models", "'models' must map a model id to a mapping of hyperparameters")
        self.model_overrides: dict[str, dict] = {str(k): dict(v) for k, v in models.items()}

        cache_dir = self.execution.get("cache_dir")
        self.cache_dir: Path | None = self._resolve(cache_dir) if cache_dir else None

    def search_space(self, seeds: list[int] | None = None):
        """The validated SearchSpaceSpec, optionally with a seed override."""
        from .search_space import SearchSpaceSpec

        if not self.search_space_raw:
            raise ConfigError("search_space", "no 'search_space' section in the config file")
        spec = SearchSpaceSpec.from_mapping(self.search_space_raw)
        if seeds:
            spec = spec.with_seeds(seeds)
        return spec

    def require_dataset(self) -> tuple[Path, str]:
        if self.dataset_path is None:
            raise ConfigError("dataset.path", "no 'dataset.path' in the config file")
        return self.dataset_path, self.dataset_schema

    def transform_settings(self):
        from .transform import TransformSettings

        try:
            return TransformSettings(
                ig_bins=int(self.transform["ig_bins"]),
                noise_scale=float(self.transform["noise_scale"]),
                augment_ratio=float(self.transform["augment_ratio"]),
                mixup_alpha=float(self.transform["mixup_alpha"]),
                k_neighbors=int(self.transform["k_neighbors"]),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("transform", f"invalid transform setting: {exc}") from exc

    def model_specs(self) -> dict:
        """ModelSpec per model id, defaults overlaid with the file's overrides."""
        from .models import ModelError, model_spec

        specs = {}
        for name, overrides in self.model_overrides.items():
            try:
                spec = model_spec(name, overrides)
            except ModelError as exc:
                raise ConfigError(f"models.{name}", str(exc)) from exc
            specs[spec.short_id] = spec
        return specs
