# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Shared fixtures: small in-memory datasets and on-disk CSV/config files."""

import numpy as np
import pandas as pd
import pytest

from branchlab.analysis import table_from_frame
from branchlab.dataset import TabularDataset
from branchlab.executor import CONFIG_COLUMNS, MERGED_COLUMNS
from branchlab.metrics import METRIC_COLUMNS


def make_dataset(features, labels, names=None, invalid_zero=None):
    features = np.asarray(features, dtype=float)
    d = features.shape[1]
    names = tuple(names or (f"f{j}" for j in range(d)))
    return TabularDataset(
        features=features,
        labels=np.asarray(labels, dtype=int),
        column_names=names,
        categorical_flags=(False,) * d,
        invalid_zero_flags=tuple(invalid_zero or (False,) * d),
    )


def blob_arrays(n_per_class=30, seed=0):
    """Two well-separated Gaussian clusters in columns 0-1, pure noise in column 2."""
    rng = np.random.default_rng(seed)
    negatives = np.column_stack([rng.normal(-2.0, 0.5, n_per_class), rng.normal(-2.0, 0.5, n_per_class)])
    positives = np.column_stack([rng.normal(2.0, 0.5, n_per_class), rng.normal(2.0, 0.5, n_per_class)])
    separable = np.vstack([negatives, positives])
    noise = rng.uniform(0.0, 1.0, 2 * n_per_class)
    features = np.column_stack([separable, noise])
    labels = np.repeat([0, 1], n_per_class)
    return features, labels


@pytest.fixture
def blobs():
    features, labels = blob_arrays()
    return make_dataset(features, labels)


@pytest.fixture
def blobs_csv(tmp_path):
    features, labels = blob_arrays()
    lines = ["a,b,noise,label"]
    lines += [f"{x[0]!r},{x[1]!r},{x[2]!r},{y}" for x, y in zip(features, labels)]
    path = tmp_path / "blobs.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def lab_config_file(tmp_path, blobs_csv):
    """Experiment file over blobs.csv with a 2-model, 2-seed space."""
    path = tmp_path / ".branchlab.yaml"
    path.write_text(
        f"""
run_id: R1
log_root: logs
dataset:
  path: {blobs_csv.name}
  schema: generic
search_space:
  feature_selection_methods: [infgain]
  feature_counts: [2]
  scalers: [standard]
  norm_first: [true]
  augmentations: [noAug]
  imbalance_methods: [noImbl]
  models: [LR, DT]
  split_ratios: [0.25]
  prob_thresholds: [0.5]
  seeds: [1, 2]
models:
  DT:
    max_depth: 3
"""
    )
    return path


CONFIG_DEFAULTS = {
    "Features": 2,
    "FSMethod": "infgain",
    "Scaler": "standard",
    "NormFirst": True,
    "AugMethod": "noAug",
    "ImblMethod": "noImbl",
    "Model": "LR",
    "SplitRatio": 0.2,
    "ProbThreshold": 0.5,
    "Seed": 1,
}


def make_table(rows, metric_default=0.5):
    """MergedTable from partial rows; unspecified metrics take `metric_default`."""
    full = []
    for overrides in rows:
        row = {**CONFIG_DEFAULTS, **{m: metric_default for m in METRIC_COLUMNS}, "RunID": "R1", **overrides}
        row.setdefault("BranchID", "|".join(str(row[c]) for c in CONFIG_COLUMNS))
        row.setdefault("LogDir", f"{row['Features']}/{row['FSMethod']}/x/{row['Model']}")
        full.append(row)
    return table_from_frame(pd.DataFrame(full, columns=list(MERGED_COLUMNS)))
