# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Named analyses and their CSV artifacts.

Each analysis takes a MergedTable and writes one or more CSV files with a
stable schema into the output directory (default `<log_root>/analysis`).
"""

from __future__ import annotations

import re
import warnings
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path

import pandas as pd

from . import analysis
from .analysis_stats import AnalysisError, critical_difference, friedman_test, pairwise_wilcoxon
from .config_loader import DEFAULT_ANALYSIS, ConfigError
from .executor import CONFIG_COLUMNS
from .metrics import METRIC_COLUMNS


@dataclass(frozen=True)
class AnalysisOptions:
    metric: str = DEFAULT_ANALYSIS["metric"]
    metrics: tuple[str, ...] = tuple(DEFAULT_ANALYSIS["metrics"])
    top_n: int = DEFAULT_ANALYSIS["top_n"]
    nrrs_lambda: float = DEFAULT_ANALYSIS["nrrs_lambda"]
    alpha: float = DEFAULT_ANALYSIS["alpha"]
    rf_trees: int = DEFAULT_ANALYSIS["rf_trees"]
    rf_seed: int = DEFAULT_ANALYSIS["rf_seed"]
    block_by: str = DEFAULT_ANALYSIS["block_by"]
    similarity_tolerance: float = DEFAULT_ANALYSIS["similarity_tolerance"]
    components: tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def from_mapping(cls, section: Mapping) -> AnalysisOptions:
        """Build from the `analysis` section of the config file."""
        try:
            return cls(
                metric=str(section["metric"]),
                metrics=tuple(str(m) for m in section["metrics"]),
                top_n=int(section["top_n"]),
                nrrs_lambda=float(section["nrrs_lambda"]),
                alpha=float(section["alpha"]),
                rf_trees=int(section["rf_trees"]),
                rf_seed=int(section["rf_seed"]),
                block_by=str(section["block_by"]),
                similarity_tolerance=float(section["similarity_tolerance"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("analysis", f"invalid analysis setting: {exc}") from exc

    def narrowed(self, metric: str | None = None, component: str | None = None, top_n: int | None = None):
        """Copy with command-line scope applied."""
        changes = {}
        if metric:
            changes["metric"] = metric
        if component:
            changes["components"] = (component,)
        if top_n:
            changes["top_n"] = top_n
        return replace(self, **changes)

    def selected_components(self, table: analysis.MergedTable) -> list[str]:
        if self.components:
            return list(self.components)
        return table.varying_components()


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def _write(frame: pd.DataFrame, out_dir: Path, name: str, index: bool = False) -> Path:
    path = out_dir / f"{name}.csv"
    frame.to_csv(path, index=index, lineterminator="\n")
    return path


def run_aggregate(table, options, out_dir) -> list[Path]:
    rows = []
    for metric in options.metrics:
        mean, std = analysis.aggregate_stats(table, metric)
        rows.append({"Metric": metric, "Mean": mean, "Std": std})
    return [_write(pd.DataFrame(rows, columns=["Metric", "Mean", "Std"]), out_dir, "aggregate")]


def run_distribution(table, options, out_dir) -> list[Path]:
    return [_write(analysis.metric_distribution(table, options.metrics), out_dir, "distribution")]


def run_rank(table, options, out_dir) -> list[Path]:
    return [_write(analysis.rank_pipelines(table, options.metric, options.top_n), out_dir, "rank")]


def run_class_f1(table, options, out_dir) -> list[Path]:
    return [_write(analysis.rank_class_f1(table, options.top_n), out_dir, "class_f1")]


def run_component(table, options, out_dir) -> list[Path]:
    summary = analysis.component_summary(table, options.metric)
    values = pd.concat(
        [analysis.component_stats(table, c, options.metric).to_frame() for c in CONFIG_COLUMNS],
        ignore_index=True,
    )
    return [_write(summary, out_dir, "component"), _write(values, out_dir, "component_values")]


def run_importance(table, options, out_dir) -> list[Path]:
    paths = []
    for level in ("component", "part"):
        scores = analysis.rf_importance(table, options.metric, level, options.rf_trees, options.rf_seed)
        frame = pd.DataFrame({"Feature": list(scores), "Importance": list(scores.values())})
        paths.append(_write(frame, out_dir, f"importance_{level}"))
    return paths


def run_similarity(table, options, out_dir) -> list[Path]:
    paths = []
    clusters = []
    for component in options.selected_components(table):
        if table.frame[component].nunique() < 2:
            continue
        raw = analysis.rms_value_similarity(table, component, options.metrics)
        norm = analysis.rms_value_similarity(table, component, options.metrics, normalized=True)
        paths.append(_write(raw, out_dir, f"similarity_{component}", index=True))
        paths.append(_write(norm, out_dir, f"similarity_{component}_normalized", index=True))
        for number, members in enumerate(analysis.equivalent_value_clusters(raw, options.similarity_tolerance)):
            clusters.append({"Component": component, "Cluster": number, "Values": " ".join(members),
                             "Size": len(members)})
    frame = pd.DataFrame(clusters, columns=["Component", "Cluster", "Values", "Size"])
    paths.append(_write(frame, out_dir, "similarity_clusters"))
    return paths


def run_correlation(table, options, out_dir) -> list[Path]:
    result = analysis.part_correlation(table, options.metric)
    return [
        _write(result.matrix, out_dir, "correlation", index=True),
        _write(result.top_by_mean, out_dir, "correlation_top_mean"),
        _write(result.top_by_std, out_dir, "correlation_top_std"),
        _write(result.clustered, out_dir, "correlation_clustered", index=True),
    ]


def run_interaction(table, options, out_dir) -> list[Path]:
    varying = table.varying_components()
    if options.components:
        pairs = [(c, o) for c in options.components for o in varying if o != c]
    else:
        pairs = list(combinations(varying, 2))
    paths = []
    for a, b in pairs:
        pivot = analysis.interaction_table(table, a, b, options.metric)
        paths.append(_write(pivot, out_dir, f"interaction_{_slug(a)}__{_slug(b)}", index=True))
    return paths


def run_robustness(table, options, out_dir) -> list[Path]:
    summary = analysis.cross_seed_summary(table, options.metrics, options.metric, options.nrrs_lambda)
    return [
        _write(summary.groups, out_dir, "robustness_groups"),
        _write(summary.models, out_dir, "robustness_models"),
    ]


def run_friedman(table, options, out_dir) -> list[Path]:
    matrix = analysis.model_block_matrix(table, options.metric, options.block_by)
    result = friedman_test(matrix)
    try:
        cd = critical_difference(result.n_treatments, result.n_blocks, options.alpha)
    except AnalysisError:
        cd = float("nan")
    summary = pd.DataFrame(
        [
            {
                "Metric": options.metric,
                "BlockBy": options.block_by,
                "ChiSquare": result.statistic,
                "PValue": result.p_value,
                "N": result.n_blocks,
                "k": result.n_treatments,
                "Alpha": options.alpha,
                "CD": cd,
            }
        ]
    )
    ranks = pd.DataFrame({"Model": list(result.mean_ranks), "MeanRank": list(result.mean_ranks.values())})
    ranks = ranks.sort_values(["MeanRank", "Model"], kind="mergesort")
    return [_write(summary, out_dir, "friedman"), _write(ranks, out_dir, "friedman_ranks")]


def run_wilcoxon(table, options, out_dir) -> list[Path]:
    matrix = analysis.model_block_matrix(table, options.metric, options.block_by)
    return [_write(pairwise_wilcoxon(matrix, options.alpha), out_dir, "wilcoxon")]


ANALYSES: dict[str, Callable] = {
    "aggregate": run_aggregate,
    "distribution": run_distribution,
    "rank": run_rank,
    "class_f1": run_class_f1,
    "component": run_component,
    "importance": run_importance,
    "similarity": run_similarity,
    "correlation": run_correlation,
    "interaction": run_interaction,
    "robustness": run_robustness,
    "friedman": run_friedman,
    "wilcoxon": run_wilcoxon,
}


@dataclass
class SuiteResult:
    artifacts: dict[str, list[Path]] = field(default_factory=dict)
    skipped: dict[str, str] = field(default_factory=dict)


def run_analyses(
    table: analysis.MergedTable,
    names: Iterable[str] | None,
    out_dir: str | Path,
    options: AnalysisOptions | None = None,
) -> SuiteResult:
    """Run the named analyses (all when None); inapplicable ones are skipped with a warning."""
    options = options or AnalysisOptions()
    names = list(names) if names else list(ANALYSES)
    unknown = [n for n in names if n not in ANALYSES]
    if unknown:
        raise AnalysisError(f"unknown analysis {unknown[0]!r} (known: {', '.join(ANALYSES)})")
    for metric in (options.metric, *options.metrics):
        if metric not in METRIC_COLUMNS:
            raise AnalysisError(f"unknown metric {metric!r} (known: {', '.join(METRIC_COLUMNS)})")
    for component in options.components:
        if component not in CONFIG_COLUMNS:
            raise AnalysisError(f"unknown component {component!r} (known: {', '.join(CONFIG_COLUMNS)})")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = SuiteResult()
    for name in names:
        try:
            result.artifacts[name] = ANALYSES[name](table, options, out_dir)
        except AnalysisError as exc:
            if len(names) == 1:
                raise
            warnings.warn(f"analysis '{name}' skipped: {exc}", stacklevel=2)
            result.skipped[name] = str(exc)
    return result
