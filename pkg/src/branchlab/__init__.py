# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""
Branchlab
Deterministic pipeline search for tabular binary classification

Features:
- Cartesian search space over feature selection, scaling, augmentation,
  imbalance handling, model, split ratio, threshold and seed
- Every branch logged under a stable LogDir with a merged CSV per run
- Offline analysis of merged logs: rankings, component impact, similarity,
  correlation, cross-seed robustness, Friedman / Wilcoxon tests
"""

from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as _pkg_version

try:
    __version__ = _pkg_version("branchlab")
except PackageNotFoundError:
    # imported from a bare checkout without installing
    __version__ = "0.0.0+unknown"

__author__ = "Soltein SA de CV"

from .analysis import MergedTable, merge_logs
from .analysis_suite import ANALYSES, AnalysisOptions, run_analyses
from .config_loader import ConfigError, LabConfig
from .dataset import TabularDataset, load_dataset, split_train_test
from .executor import BranchRecord, ExecutionOptions, run_all, run_branch
from .metrics import MetricReport, evaluate
from .models import model_spec, predict_proba, train
from .report import render_report
from .search_space import PipelineConfig, SearchSpaceSpec, branch_id, enumerate_branches

__all__ = [
    # Search space
    "PipelineConfig",
    "SearchSpaceSpec",
    "enumerate_branches",
    "branch_id",
    # Config
    "LabConfig",
    "ConfigError",
    # Data
    "TabularDataset",
    "load_dataset",
    "split_train_test",
    # Models and metrics
    "model_spec",
    "train",
    "predict_proba",
    "MetricReport",
    "evaluate",
    # Execution
    "BranchRecord",
    "ExecutionOptions",
    "run_branch",
    "run_all",
    # Analysis
    "MergedTable",
    "merge_logs",
    "AnalysisOptions",
    "ANALYSES",
    "run_analyses",
    "render_report",
]
