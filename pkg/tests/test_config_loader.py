# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Tests for config_loader.py: file lookup, defaults, environment fallback,
path resolution and the typed views (search space, transforms, models)."""

from pathlib import Path

import pytest

from branchlab.config_loader import DEFAULT_ANALYSIS, LOG_ROOT_ENV, ConfigError, LabConfig

SEARCH_SPACE = """
search_space:
  feature_selection_methods: [infgain]
  feature_counts: [2]
  scalers: [standard]
  norm_first: [true]
  augmentations: [noAug]
  imbalance_methods: [noImbl]
  models: [LR, RF]
  split_ratios: [0.2]
  prob_thresholds: [0.5]
  seeds: [1, 2]
"""


class TestLookup:
    def test_defaults_with_no_config_file(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.delenv(LOG_ROOT_ENV, raising=False)
        config = LabConfig()
        assert config.path is None
        assert config.run_id is None
        assert config.workers == 1
        assert config.log_root == Path("logs")
        assert config.dataset_path is None
        assert config.analysis == DEFAULT_ANALYSIS

    def test_found_in_parent_directory(self, tmp_path, monkeypatch):
        (tmp_path / ".branchlab.yaml").write_text("run_id: R7\n")
        nested = tmp_path / "a" / "b"
        nested.mkdir(parents=True)
        monkeypatch.chdir(nested)
        config = LabConfig()
        assert config.path == tmp_path / ".branchlab.yaml"
        assert config.run_id == "R7"

    def test_explicit_path_must_exist(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            LabConfig(tmp_path / "missing.yaml")
        assert exc.value.key == "config"

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("run_id: [unclosed\n")
        with pytest.raises(ConfigError):
            LabConfig(path)

    def test_top_level_must_be_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- a\n- b\n")
        with pytest.raises(ConfigError):
            LabConfig(path)


class TestSettings:
    def test_relative_paths_resolve_against_file(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text("log_root: out\ndataset:\n  path: data/pima.csv\n  schema: pima\n")
        config = LabConfig(path)
        assert config.log_root == tmp_path / "out"
        assert config.require_dataset() == (tmp_path / "data" / "pima.csv", "pima")

    def test_log_root_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv(LOG_ROOT_ENV, str(tmp_path / "envlogs"))
        assert LabConfig(data={}).log_root == tmp_path / "envlogs"

    def test_file_log_root_wins_over_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(LOG_ROOT_ENV, "/elsewhere")
        config = LabConfig(data={"log_root": str(tmp_path)})
        assert config.log_root == tmp_path

    @pytest.mark.parametrize("workers", [0, -2, "many"])
    def test_invalid_workers(self, workers):
        with pytest.raises(ConfigError) as exc:
            LabConfig(data={"workers": workers})
        assert exc.value.key == "workers"

    def test_missing_dataset_path(self):
        with pytest.raises(ConfigError) as exc:
            LabConfig(data={}).require_dataset()
        assert exc.value.key == "dataset.path"

    def test_unknown_section_key(self):
        with pytest.raises(ConfigError) as exc:
            LabConfig(data={"analysis": {"metirc": "Accuracy"}})
        assert exc.value.key == "analysis.metirc"

    def test_section_overrides_merge_with_defaults(self):
        config = LabConfig(data={"analysis": {"top_n": 3}, "transform": {"k_neighbors": 3}})
        assert config.analysis["top_n"] == 3
        assert config.analysis["metric"] == "Macro_F1"
        assert config.transform_settings().k_neighbors == 3
        assert config.transform_settings().noise_scale == 0.05

    def test_cache_dir_resolved(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text("execution:\n  cache_dir: cache\n")
        assert LabConfig(path).cache_dir == tmp_path / "cache"


class TestTypedViews:
    def test_search_space_from_file(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text(SEARCH_SPACE)
        spec = LabConfig(path).search_space()
        assert spec.models == ("LR", "RF")
        assert spec.seeds == (1, 2)

    def test_seed_override(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text(SEARCH_SPACE)
        assert LabConfig(path).search_space([5, 6, 7]).seeds == (5, 6, 7)

    def test_missing_search_space(self):
        with pytest.raises(ConfigError) as exc:
            LabConfig(data={}).search_space()
        assert exc.value.key == "search_space"

    def test_model_overrides(self):
        config = LabConfig(data={"models": {"random_forest": {"n_trees": 10}}})
        specs = config.model_specs()
        assert list(specs) == ["RF"]
        assert specs["RF"].hyperparameters["n_trees"] == 10
        assert specs["RF"].hyperparameters["max_depth"] == 8

    def test_unknown_hyperparameter(self):
        config = LabConfig(data={"models": {"LR": {"momentum": 0.9}}})
        with pytest.raises(ConfigError) as exc:
            config.model_specs()
        assert exc.value.key == "models.LR"

    def test_models_section_shape(self):
        with pytest.raises(ConfigError):
            LabConfig(data={"models": {"LR": 3}})

    def test_invalid_transform_setting(self):
        with pytest.raises(ConfigError):
            LabConfig(data={"transform": {"ig_bins": "ten"}}).transform_settings()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
