# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Plain-text consolidated report over merged logs.

Sections: aggregate statistics, top pipelines per metric plus class-wise
F1, component impact, cross-seed robustness per model, and the Friedman /
critical-difference line. Output depends only on the table and options.
"""

from __future__ import annotations

import os
import sys
import warnings

import pandas as pd

from . import analysis
from .analysis_stats import AnalysisError, critical_difference, friedman_test
from .analysis_suite import AnalysisOptions

REPORT_METRICS = ("Accuracy", "Macro_F1", "Weighted_F1", "Micro_F1", "Integrated_Score")
BOLD = "\033[1m"
RESET = "\033[0m"


class ReportPrinter:
    """Renders the report to a string; bold banners only on an interactive terminal."""

    def __init__(self, use_colors: bool = True, stream=None):
        stream = stream or sys.stdout
        is_tty = hasattr(stream, "isatty") and stream.isatty()
        self.use_colors = use_colors and is_tty and os.environ.get("CI") is None
        self._lines: list[str] = []

    def _print(self, text: str = "") -> None:
        self._lines.append(text)

    def _bold(self, text: str) -> str:
        if self.use_colors:
            return f"{BOLD}{text}{RESET}"
        return text

    def _section(self, title: str) -> None:
        self._print("")
        self._print(self._bold("=" * 60))
        self._print(self._bold(title))
        self._print(self._bold("=" * 60))

    def _table(self, frame: pd.DataFrame) -> None:
        if frame.empty:
            self._print("  (no rows)")
            return
        text = frame.to_string(index=False, float_format=lambda v: f"{v:.4f}")
        for line in text.splitlines():
            self._print(f"  {line}")

    def render(self, table: analysis.MergedTable, options: AnalysisOptions | None = None) -> str:
        options = options or AnalysisOptions()
        if len(table) == 0:
            raise AnalysisError("no branch rows to report on")
        self._lines = []
        self._print(self._bold("BRANCHLAB REPORT"))
        self._print(f"  Runs: {', '.join(table.run_ids)}")
        self._print(f"  Branches: {len(table)}")

        self._aggregate(table)
        self._top(table, options)
        self._components(table, options)
        self._robustness(table, options)
        self._friedman(table, options)
        self._print("")
        return "\n".join(self._lines)

    def _aggregate(self, table):
        self._section("AGGREGATE STATISTICS")
        rows = []
        for metric in REPORT_METRICS:
            values = table.frame[metric].to_numpy(float)
            rows.append({"Metric": metric, "Mean": values.mean(), "Std": values.std()})
        self._table(pd.DataFrame(rows))

    def _top(self, table, options):
        self._section(f"TOP-{options.top_n} PIPELINES")
        for metric in REPORT_METRICS:
            self._print("")
            self._print(f"  {metric}")
            self._print("  " + "-" * 50)
            self._table(analysis.rank_pipelines(table, metric, options.top_n).loc[:, ["Rank", "Value", "RunID",
                                                                                      "LogDir"]])
        self._print("")
        self._print(f"  Class-wise F1 (top {options.top_n})")
        self._print("  " + "-" * 50)
        self._table(analysis.rank_class_f1(table, options.top_n))

    def _components(self, table, options):
        self._section(f"COMPONENT IMPACT ({options.metric})")
        summary = analysis.component_summary(table, options.metric)
        if options.components:
            summary = summary[summary["Component"].isin(options.components)]
        self._table(summary.sort_values(["Delta", "Component"], ascending=[False, True], kind="mergesort"))

    def _robustness(self, table, options):
        self._section(f"CROSS-SEED ROBUSTNESS ({options.metric})")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            models = analysis.cross_seed_summary(table, [options.metric], options.metric, options.nrrs_lambda).models
        shown = pd.DataFrame(
            {
                "Model": models["Model"],
                "Mean": models[f"{options.metric}_mean"],
                "Std": models[f"{options.metric}_std"],
                "MeanRank": models["MeanRank"],
                "NRRS": models["NRRS"],
            }
        )
        self._table(shown)

    def _friedman(self, table, options):
        self._section("FRIEDMAN TEST")
        try:
            matrix = analysis.model_block_matrix(table, options.metric, options.block_by)
            result = friedman_test(matrix)
        except AnalysisError as exc:
            self._print(f"  not available: {exc}")
            return
        try:
            cd = f"{critical_difference(result.n_treatments, result.n_blocks, options.alpha):.4f}"
        except AnalysisError:
            cd = "n/a"
        self._print(
            f"  {options.metric}: chi2={result.statistic:.4f} p={result.p_value:.3g} "
            f"N={result.n_blocks} k={result.n_treatments} CD(alpha={options.alpha})={cd}"
        )
        ranks = sorted(result.mean_ranks.items(), key=lambda item: (item[1], item[0]))
        self._print("  Mean ranks: " + ", ".join(f"{model} {rank:.3f}" for model, rank in ranks))


def render_report(table: analysis.MergedTable, options: AnalysisOptions | None = None) -> str:
    return ReportPrinter(use_colors=False).render(table, options)
