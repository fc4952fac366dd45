# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Cross-run analysis over merged branch logs.

Everything here is a pure function of a MergedTable. A *component* is a
configuration column (FSMethod, Scaler, ...); a *part* is one value of a
component. Standard deviations are population deviations throughout.
"""

from __future__ import annotations

import warnings
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.cluster.hierarchy import leaves_list, linkage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import squareform

from .analysis_stats import AnalysisError, nrrs, within_block_ranks
from .executor import CONFIG_COLUMNS, MERGED_COLUMNS, RUN_FILE, RecordError, read_record
from .metrics import METRIC_COLUMNS
from .models import RandomForestRegressor
from .transform import stage_rng

ANALYSIS_DIR = "analysis"
MIN_IMPORTANCE_ROWS = 50
CLASS_F1_COLUMNS = (
    "F1",
    "Class",
    "RunID",
    "Features",
    "FSMethod",
    "Scaler",
    "AugMethod",
    "ImblMethod",
    "Model",
    "Accuracy",
    "Weighted_F1",
    "Macro_F1",
    "NormFirst",
    "SplitRatio",
    "ProbThreshold",
    "Seed",
)


@dataclass(frozen=True, eq=False)
class MergedTable:
    """Successful branch rows of one or more runs, ordered by (RunID, BranchID)."""

    frame: pd.DataFrame
    run_ids: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.frame)

    def components(self) -> list[str]:
        return list(CONFIG_COLUMNS)

    def varying_components(self) -> list[str]:
        return [c for c in CONFIG_COLUMNS if self.frame[c].nunique() > 1]


def table_from_frame(frame: pd.DataFrame) -> MergedTable:
    """Canonicalize a merged-CSV-shaped frame."""
    missing = [c for c in MERGED_COLUMNS if c not in frame.columns]
    if missing:
        raise AnalysisError(f"merged table lacks column(s): {', '.join(missing)}")
    frame = frame.loc[:, list(MERGED_COLUMNS)].copy()
    frame["Features"] = frame["Features"].astype(str)
    frame["RunID"] = frame["RunID"].astype(str)
    frame = frame.sort_values(["RunID", "BranchID"], kind="mergesort").reset_index(drop=True)
    if frame.duplicated(["RunID", "BranchID"]).any():
        raise AnalysisError("merged table has duplicate (RunID, BranchID) rows")
    return MergedTable(frame=frame, run_ids=tuple(sorted(frame["RunID"].unique())))


def list_runs(log_root: str | Path) -> list[str]:
    """Run ids under the log root that carry a run file."""
    root = Path(log_root)
    if not root.is_dir():
        return []
    return sorted(p.name for p in root.iterdir() if p.is_dir() and p.name != ANALYSIS_DIR and (p / RUN_FILE).exists())


def merge_logs(log_root: str | Path, run_ids: Sequence[str] | None = None, lenient: bool = False) -> MergedTable:
    """Union of the branch records of the given runs (all runs when None).

    Malformed records raise RecordError, or are skipped with a warning when
    `lenient` is set. Failed branches carry no metrics and are left out.
    """
    root = Path(log_root)
    available = list_runs(root)
    if run_ids:
        unknown = [r for r in run_ids if r not in available]
        if unknown:
            raise RecordError(root / unknown[0], f"unknown run id {unknown[0]!r}")
        selected = sorted(set(run_ids))
    else:
        selected = available
    if not selected:
        raise RecordError(root, "no runs found under the log root")

    rows = []
    for run_id in selected:
        for path in sorted((root / run_id).rglob("branch-*.json")):
            try:
                record = read_record(path)
            except RecordError as exc:
                if not lenient:
                    raise
                warnings.warn(f"skipping {exc}", stacklevel=2)
                continue
            if record.ok:
                row = record.merged_row()
                row["RunID"] = run_id
                rows.append(row)
    if not rows:
        raise RecordError(root, f"no successful branch records in run(s) {', '.join(selected)}")
    return table_from_frame(pd.DataFrame(rows, columns=list(MERGED_COLUMNS)))


def _check_metric(table: MergedTable, metric: str) -> None:
    if metric not in METRIC_COLUMNS:
        raise AnalysisError(f"unknown metric {metric!r} (known: {', '.join(METRIC_COLUMNS)})")


def _check_component(component: str) -> None:
    if component not in CONFIG_COLUMNS:
        raise AnalysisError(f"unknown component {component!r} (known: {', '.join(CONFIG_COLUMNS)})")


# =============================================================================
# AGGREGATES AND RANKINGS
# =============================================================================


def aggregate_stats(table: MergedTable, metric: str) -> tuple[float, float]:
    """(mean, population std) of a metric over all rows."""
    _check_metric(table, metric)
    if len(table) < 2:
        raise AnalysisError(f"aggregate statistics need at least 2 rows, got {len(table)}")
    values = table.frame[metric].to_numpy(float)
    return float(values.mean()), float(values.std())


def metric_distribution(table: MergedTable, metrics: Iterable[str] = METRIC_COLUMNS) -> pd.DataFrame:
    rows = []
    for metric in metrics:
        _check_metric(table, metric)
        values = table.frame[metric].to_numpy(float)
        q1, median, q3 = np.quantile(values, [0.25, 0.5, 0.75])
        rows.append(
            {
                "Metric": metric,
                "Count": len(values),
                "Mean": values.mean(),
                "Std": values.std(),
                "Min": values.min(),
                "Q1": q1,
                "Median": median,
                "Q3": q3,
                "Max": values.max(),
            }
        )
    return pd.DataFrame(rows)


def rank_pipelines(table: MergedTable, metric: str, n: int = 5, ascending: bool = False) -> pd.DataFrame:
    """Top-n rows by metric (bottom-n with ascending); ties by BranchID."""
    _check_metric(table, metric)
    if n < 1:
        raise AnalysisError(f"n must be at least 1, got {n}")
    ordered = table.frame.sort_values(
        [metric, "BranchID", "RunID"], ascending=[ascending, True, True], kind="mergesort"
    ).head(n)
    out = pd.DataFrame(
        {
            "Rank": np.arange(1, len(ordered) + 1),
            "Metric": metric,
            "Value": ordered[metric].to_numpy(),
            "LogDir": ordered["LogDir"].to_numpy(),
            "RunID": ordered["RunID"].to_numpy(),
            "BranchID": ordered["BranchID"].to_numpy(),
        }
    )
    for column in CONFIG_COLUMNS:
        out[column] = ordered[column].to_numpy()
    return out


def rank_class_f1(table: MergedTable, n: int = 5) -> pd.DataFrame:
    """Top-n (branch, class) pairs by per-class F1."""
    if n < 1:
        raise AnalysisError(f"n must be at least 1, got {n}")
    frames = []
    for cls in (0, 1):
        part = table.frame.copy()
        part["F1"] = part[f"F1_class{cls}"]
        part["Class"] = cls
        frames.append(part)
    stacked = pd.concat(frames, ignore_index=True)
    stacked = stacked.sort_values(
        ["F1", "BranchID", "RunID", "Class"], ascending=[False, True, True, True], kind="mergesort"
    )
    return stacked.loc[:, list(CLASS_F1_COLUMNS)].head(n).reset_index(drop=True)


# =============================================================================
# COMPONENT IMPACT
# =============================================================================


@dataclass(frozen=True)
class ValueStats:
    value: str
    mean: float
    std: float
    support: int


@dataclass(frozen=True)
class ComponentStats:
    component: str
    metric: str
    values: tuple[ValueStats, ...]
    delta: float
    mean_sigma: float
    sensitivity: float
    grand_mean: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"Component": self.component, "Value": v.value, "Mean": v.mean, "Std": v.std, "Support": v.support}
                for v in self.values
            ]
        )


def component_stats(table: MergedTable, component: str, metric: str) -> ComponentStats:
    """Per-value conditional mean/std, impact (max-min) and sensitivity (variance of value means)."""
    _check_component(component)
    _check_metric(table, metric)
    values = []
    keys = table.frame[component].astype(str)
    for value in sorted(keys.unique()):
        sample = table.frame.loc[keys == value, metric].to_numpy(float)
        values.append(ValueStats(value=value, mean=float(sample.mean()), std=float(sample.std()),
                                 support=len(sample)))
    means = np.array([v.mean for v in values])
    grand = float(means.mean())
    return ComponentStats(
        component=component,
        metric=metric,
        values=tuple(values),
        delta=float(means.max() - means.min()),
        mean_sigma=float(np.mean([v.std for v in values])),
        sensitivity=float(np.mean((means - grand) ** 2)),
        grand_mean=grand,
    )


def interaction_table(table: MergedTable, component_a: str, component_b: str, metric: str) -> pd.DataFrame:
    """Mean metric conditioned jointly on two components (rows a, columns b)."""
    _check_component(component_a)
    _check_component(component_b)
    _check_metric(table, metric)
    if component_a == component_b:
        raise AnalysisError("interaction needs two different components")
    frame = table.frame.assign(**{component_a: table.frame[component_a].astype(str),
                                  component_b: table.frame[component_b].astype(str)})
    return frame.pivot_table(index=component_a, columns=component_b, values=metric, aggfunc="mean").sort_index()


def _encode_components(frame: pd.DataFrame, level: str) -> tuple[np.ndarray, list[str]]:
    if level == "component":
        columns = []
        for component in CONFIG_COLUMNS:
            keys = frame[component].astype(str)
            codes = {v: i for i, v in enumerate(sorted(keys.unique()))}
            columns.append(keys.map(codes).to_numpy(float))
        return np.column_stack(columns), list(CONFIG_COLUMNS)
    if level == "part":
        columns, names = [], []
        for component in CONFIG_COLUMNS:
            keys = frame[component].astype(str)
            for value in sorted(keys.unique()):
                columns.append((keys == value).to_numpy(float))
                names.append(f"{component}={value}")
        return np.column_stack(columns), names
    raise AnalysisError(f"importance level must be 'component' or 'part', got {level!r}")


def rf_importance(
    table: MergedTable,
    metric: str,
    level: str = "component",
    n_trees: int = 100,
    seed: int = 0,
) -> dict[str, float]:
    """Normalized impurity-decrease importance of configuration features for predicting the metric."""
    _check_metric(table, metric)
    frame = table.frame.sort_values(["RunID", "BranchID"], kind="mergesort")
    features, names = _encode_components(frame, level)
    target = frame[metric].to_numpy(float)
    if len(frame) < MIN_IMPORTANCE_ROWS:
        warnings.warn(f"importance fit on only {len(frame)} rows (recommended >= {MIN_IMPORTANCE_ROWS})",
                      stacklevel=2)
    if np.ptp(target) == 0:
        warnings.warn(f"metric {metric} is constant; importances are uniform", stacklevel=2)
        return {name: 1.0 / len(names) for name in names}

    forest = RandomForestRegressor(n_trees=n_trees).fit(features, target, stage_rng(seed, "rf_importance"))
    return {name: float(v) for name, v in zip(names, forest.feature_importances, strict=True)}


def component_summary(
    table: MergedTable,
    metric: str,
    importance: dict[str, float] | None = None,
) -> pd.DataFrame:
    rows = []
    for component in CONFIG_COLUMNS:
        cs = component_stats(table, component, metric)
        row = {"Component": component, "Values": len(cs.values), "Delta": cs.delta,
               "MeanSigma": cs.mean_sigma, "S": cs.sensitivity}
        if importance is not None:
            row["Importance"] = importance.get(component, 0.0)
        rows.append(row)
    return pd.DataFrame(rows)


# =============================================================================
# VALUE SIMILARITY AND PART CORRELATION
# =============================================================================


def rms_value_similarity(
    table: MergedTable,
    component: str,
    metrics: Sequence[str],
    normalized: bool = False,
) -> pd.DataFrame:
    """Mean over matched contexts of the RMS metric difference between two values.

    A context fixes every other configuration column and the run. Pairs
    never observed in a shared context are NaN.
    """
    _check_component(component)
    metrics = list(metrics)
    if not metrics:
        raise AnalysisError("similarity needs at least one metric")
    for metric in metrics:
        _check_metric(table, metric)
    frame = table.frame.assign(**{component: table.frame[component].astype(str)})
    values = sorted(frame[component].unique())
    if len(values) < 2:
        raise AnalysisError(f"component {component} has a single value")

    context = ["RunID"] + [c for c in CONFIG_COLUMNS if c != component]
    frame = frame.assign(_context=frame[context].astype(str).agg("|".join, axis=1))
    cubes = [frame.pivot_table(index="_context", columns=component, values=m, aggfunc="first")
             .reindex(columns=values) for m in metrics]
    stacked = np.stack([c.to_numpy(float) for c in cubes])  # metrics × contexts × values
    if normalized:
        variance = np.nanvar(stacked, axis=2, keepdims=True)

    matrix = np.full((len(values), len(values)), np.nan)
    np.fill_diagonal(matrix, 0.0)
    for i, j in combinations(range(len(values)), 2):
        both = ~np.isnan(stacked[0, :, i]) & ~np.isnan(stacked[0, :, j])
        if not both.any():
            continue
        squared = (stacked[:, both, i] - stacked[:, both, j]) ** 2
        if normalized:
            var = variance[:, both, 0]
            squared = np.where(var > 0, squared / np.where(var > 0, var, 1.0), 0.0)
        rms = np.sqrt(squared.mean(axis=0))
        matrix[i, j] = matrix[j, i] = float(rms.mean())
    return pd.DataFrame(matrix, index=values, columns=values)


def equivalent_value_clusters(similarity: pd.DataFrame, tolerance: float) -> list[list[str]]:
    """Connected groups of values whose pairwise RMS is within tolerance."""
    adjacency = np.nan_to_num(similarity.to_numpy(float), nan=np.inf) <= tolerance
    _, labels = connected_components(csr_matrix(adjacency), directed=False)
    clusters: dict[int, list[str]] = {}
    for value, label in zip(similarity.index, labels, strict=True):
        clusters.setdefault(int(label), []).append(str(value))
    return list(clusters.values())


@dataclass(frozen=True, eq=False)
class PartCorrelation:
    matrix: pd.DataFrame
    top_by_mean: pd.DataFrame
    top_by_std: pd.DataFrame
    clustered: pd.DataFrame


def part_correlation(table: MergedTable, metric: str, top_k: int = 10) -> PartCorrelation:
    """Uncentered cosine similarity of metric-masked branch vectors per part.

    Parts of the same component never share a branch, so their entries are
    exactly 0. Row mean and std leave out the diagonal.
    """
    _check_metric(table, metric)
    components = table.components()
    if len(components) < 2:
        raise AnalysisError("part correlation needs at least 2 components")
    frame = table.frame.sort_values(["RunID", "BranchID"], kind="mergesort")
    values = frame[metric].to_numpy(float)
    vectors, names = [], []
    for component in components:
        keys = frame[component].astype(str)
        for part in sorted(keys.unique()):
            vector = np.where(keys == part, values, 0.0)
            if np.any(vector):
                vectors.append(vector)
                names.append(f"{component}={part}")
    parts = np.vstack(vectors)
    norms = np.linalg.norm(parts, axis=1)
    cosine = (parts @ parts.T) / np.outer(norms, norms)
    owner = [n.split("=", 1)[0] for n in names]
    for i, j in combinations(range(len(names)), 2):
        if owner[i] == owner[j]:
            cosine[i, j] = cosine[j, i] = 0.0
    np.fill_diagonal(cosine, 1.0)
    matrix = pd.DataFrame(cosine, index=names, columns=names)

    off = cosine.copy()
    np.fill_diagonal(off, np.nan)
    row_stats = pd.DataFrame(
        {"Part": names, "Mean": np.nanmean(off, axis=1), "Std": np.nanstd(off, axis=1)}
    ) if len(names) > 1 else pd.DataFrame({"Part": names, "Mean": [0.0], "Std": [0.0]})
    top_mean = row_stats.sort_values(["Mean", "Part"], ascending=[False, True], kind="mergesort").head(top_k)
    top_std = row_stats.sort_values(["Std", "Part"], ascending=[False, True], kind="mergesort").head(top_k)

    if len(names) > 2:
        distance = np.clip(1.0 - cosine, 0.0, None)
        np.fill_diagonal(distance, 0.0)
        order = leaves_list(linkage(squareform(distance, checks=False), method="average"))
    else:
        order = np.arange(len(names))
    clustered = matrix.iloc[order, order]
    return PartCorrelation(matrix=matrix, top_by_mean=top_mean.reset_index(drop=True),
                           top_by_std=top_std.reset_index(drop=True), clustered=clustered)


# =============================================================================
# ROBUSTNESS ACROSS SEEDS
# =============================================================================


def model_block_matrix(table: MergedTable, metric: str, block_by: str = "context") -> pd.DataFrame:
    """Blocks × models matrix of mean metric values.

    block_by="context": one block per setting of every non-model, non-seed
    configuration column (seeds and runs averaged). block_by="seed": one
    block per seed, averaged over contexts. Blocks missing a model are dropped.
    """
    _check_metric(table, metric)
    frame = table.frame.assign(Features=table.frame["Features"].astype(str))
    if block_by == "context":
        keys = [c for c in CONFIG_COLUMNS if c not in ("Model", "Seed")]
    elif block_by == "seed":
        keys = ["Seed"]
    else:
        raise AnalysisError(f"block_by must be 'context' or 'seed', got {block_by!r}")
    matrix = frame.pivot_table(index=keys, columns="Model", values=metric, aggfunc="mean")
    matrix = matrix.dropna(axis=0, how="any").sort_index()
    matrix.columns = [str(c) for c in matrix.columns]
    return matrix


def model_rank_robustness(
    table: MergedTable,
    metric: str,
    lam: float = 1.0,
    block_by: str = "seed",
) -> pd.DataFrame:
    """Per-model mean rank, rank std and NRRS over blocks (lower NRRS is better)."""
    matrix = model_block_matrix(table, metric, block_by)
    if matrix.empty:
        raise AnalysisError(f"no complete {block_by} blocks to rank models on")
    ranks = within_block_ranks(matrix)
    rows = [
        {
            "Model": model,
            "MeanRank": float(ranks[model].mean()),
            "RankStd": float(ranks[model].to_numpy().std()),
            "NRRS": nrrs(ranks[model].to_numpy(), lam),
            "Blocks": len(ranks),
        }
        for model in ranks.columns
    ]
    return pd.DataFrame(rows).sort_values(["NRRS", "Model"], kind="mergesort").reset_index(drop=True)


@dataclass(frozen=True, eq=False)
class RobustnessSummary:
    groups: pd.DataFrame
    models: pd.DataFrame


def cross_seed_summary(
    table: MergedTable,
    metrics: Sequence[str] = ("Macro_F1",),
    rank_metric: str | None = None,
    lam: float = 1.0,
) -> RobustnessSummary:
    """Mean and std over seeds per seed-free configuration, and per model.

    Groups with a single seed keep a NaN std. Model rows average their
    groups and, when ranking is possible, carry seed-block rank statistics.
    """
    metrics = list(metrics)
    for metric in metrics:
        _check_metric(table, metric)
    keys = [c for c in CONFIG_COLUMNS if c != "Seed"]
    frame = table.frame.assign(Features=table.frame["Features"].astype(str))
    grouped = frame.groupby(keys, sort=True, dropna=False)

    groups = grouped.size().rename("Rows").to_frame()
    groups["Seeds"] = grouped["Seed"].nunique()
    for metric in metrics:
        groups[f"{metric}_mean"] = grouped[metric].mean()
        std = grouped[metric].std(ddof=0)
        groups[f"{metric}_std"] = std.where(groups["Seeds"] > 1)
    groups = groups.reset_index()

    per_model = groups.groupby("Model", sort=True)
    models = pd.DataFrame({"Groups": per_model.size()})
    for metric in metrics:
        models[f"{metric}_mean"] = per_model[f"{metric}_mean"].mean()
        models[f"{metric}_std"] = per_model[f"{metric}_std"].mean()
    models = models.reset_index()

    rank_metric = rank_metric or metrics[0]
    try:
        ranking = model_rank_robustness(table, rank_metric, lam, block_by="seed")
        models = models.merge(ranking.drop(columns=["Blocks"]), on="Model", how="left")
    except AnalysisError:
        models["MeanRank"] = models["RankStd"] = models["NRRS"] = np.nan
    return RobustnessSummary(groups=groups, models=models)
