# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Nonparametric model comparison: Friedman test, critical difference,
Wilcoxon signed-rank (exact for n <= 25), Holm-adjusted pairwise tests and
the robust rank score (NRRS).

Block matrices are blocks × treatments; a higher metric value is better and
gets rank 1.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import pandas as pd
from scipy import stats

EXACT_WILCOXON_MAX_N = 25
MIN_WILCOXON_N = 5

# studentized range statistic / sqrt(2), alpha = 0.05
CD_Q_ALPHA = {
    0.05: {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850, 7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164},
}


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float
    mean_ranks: dict[str, float]
    n_blocks: int
    n_treatments: int


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    w_plus: float
    w_minus: float
    alternative: str = "two-sided"


def _block_frame(block_matrix) -> pd.DataFrame:
    frame = block_matrix if isinstance(block_matrix, pd.DataFrame) else pd.DataFrame(np.asarray(block_matrix, float))
    frame = frame.copy()
    frame.columns = [str(c) for c in frame.columns]
    return frame


def within_block_ranks(block_matrix) -> pd.DataFrame:
    """Average ranks per row, highest value ranked 1."""
    frame = _block_frame(block_matrix)
    ranks = np.apply_along_axis(lambda row: stats.rankdata(-row, method="average"), 1, frame.to_numpy(float))
    return pd.DataFrame(ranks, index=frame.index, columns=frame.columns)


def friedman_test(block_matrix) -> FriedmanResult:
    """chi2_F = 12N / (k(k+1)) * sum(R_j^2) - 3N(k+1), R_j the mean rank of treatment j."""
    frame = _block_frame(block_matrix)
    n, k = frame.shape
    if n < 2 or k < 2:
        raise AnalysisError(f"Friedman test needs at least 2 blocks and 2 treatments, got {n}×{k}")
    if frame.isna().to_numpy().any():
        raise AnalysisError("Friedman test block matrix has missing cells")

    mean_ranks = within_block_ranks(frame).mean(axis=0)
    statistic = 12.0 * n / (k * (k + 1)) * float(np.sum(mean_ranks.to_numpy() ** 2)) - 3.0 * n * (k + 1)
    statistic = max(statistic, 0.0)
    return FriedmanResult(
        statistic=statistic,
        p_value=float(stats.chi2.sf(statistic, k - 1)),
        mean_ranks={str(c): float(v) for c, v in mean_ranks.items()},
        n_blocks=n,
        n_treatments=k,
    )


def critical_difference(k: int, n: int, alpha: float = 0.05) -> float:
    """CD = q_alpha(k) * sqrt(k(k+1) / (6N))."""
    table = CD_Q_ALPHA.get(alpha)
    if table is None:
        raise AnalysisError(f"no critical values for alpha={alpha} (supported: {sorted(CD_Q_ALPHA)})")
    if k not in table:
        raise AnalysisError(f"critical difference supports 2..10 treatments, got k={k}")
    if n < 1:
        raise AnalysisError(f"critical difference needs N >= 1 blocks, got {n}")
    return table[k] * math.sqrt(k * (k + 1) / (6.0 * n))


def _exact_w_plus_distribution(ranks: np.ndarray) -> np.ndarray:
    """Null probability of each doubled W+ value (ranks may be half-integers)."""
    doubled = np.rint(2 * ranks).astype(int)
    counts = np.zeros(int(doubled.sum()) + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r] if r else counts
        counts = counts + shifted
    return counts / 2.0 ** len(ranks)


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], alternative: str = "two-sided") -> WilcoxonResult:
    """Signed-rank test on the paired differences b - a.

    W = min(W+, W-). Zero differences are dropped and ties share average
    ranks. Exact null distribution for n <= 25, otherwise the normal
    approximation with continuity and tie corrections. "greater" tests
    whether b tends to exceed a.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise AnalysisError(f"unknown alternative {alternative!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise AnalysisError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    diff = b - a
    diff = diff[diff != 0]
    n = len(diff)
    if n == 0:
        raise AnalysisError("all paired differences are zero")
    if n < MIN_WILCOXON_N:
        warnings.warn(f"Wilcoxon test on only {n} non-zero differences", stacklevel=2)

    ranks = stats.rankdata(np.abs(diff), method="average")
    w_plus = float(ranks[diff > 0].sum())
    w_minus = float(ranks[diff < 0].sum())
    w = min(w_plus, w_minus)

    if n <= EXACT_WILCOXON_MAX_N:
        dist = _exact_w_plus_distribution(ranks)
        cdf = np.cumsum(dist)

        def at_most(value: float) -> float:
            return float(cdf[min(int(round(2 * value)), len(cdf) - 1)])

        if alternative == "two-sided":
            p = min(1.0, 2.0 * at_most(w))
        elif alternative == "greater":
            p = 1.0 - at_most(w_plus) + float(dist[int(round(2 * w_plus))])
        else:
            p = at_most(w_plus)
    else:
        mu = n * (n + 1) / 4.0
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_counts**3 - tie_counts)) / 48.0
        sigma = math.sqrt(var)
        if alternative == "two-sided":
            p = min(1.0, 2.0 * float(stats.norm.cdf((w - mu + 0.5) / sigma)))
        elif alternative == "greater":
            p = float(stats.norm.sf((w_plus - mu - 0.5) / sigma))
        else:
            p = float(stats.norm.cdf((w_plus - mu + 0.5) / sigma))
    return WilcoxonResult(
        statistic=w,
        p_value=float(min(max(p, 0.0), 1.0)),
        n=n,
        w_plus=w_plus,
        w_minus=w_minus,
        alternative=alternative,
    )


def holm_adjust(p_values: Sequence[float]) -> np.ndarray:
    """Holm step-down adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=float)
    m = len(p)
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m)
    running = 0.0
    for step, idx in enumerate(order):
        running = max(running, min(1.0, (m - step) * p[idx]))
        adjusted[idx] = running
    return adjusted


def pairwise_wilcoxon(block_matrix, alpha: float = 0.05) -> pd.DataFrame:
    """Two-sided signed-rank test for every treatment pair, Holm-adjusted."""
    frame = _block_frame(block_matrix)
    if frame.isna().to_numpy().any():
        raise AnalysisError("pairwise Wilcoxon block matrix has missing cells")
    rows = []
    for left, right in combinations(frame.columns, 2):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                result = wilcoxon_signed_rank(frame[left], frame[right])
            rows.append({"ModelA": left, "ModelB": right, "W": result.statistic, "N": result.n,
                         "PValue": result.p_value})
        except AnalysisError:
            rows.append({"ModelA": left, "ModelB": right, "W": 0.0, "N": 0, "PValue": 1.0})
    table = pd.DataFrame(rows, columns=["ModelA", "ModelB", "W", "N", "PValue"])
    table["PHolm"] = holm_adjust(table["PValue"]) if len(table) else []
    table["Significant"] = table["PHolm"] < alpha
    return table


def nrrs(ranks: Sequence[float], lam: float = 1.0) -> float:
    """Mean rank plus lam times the population std of the ranks; lower is better."""
    ranks = np.asarray(ranks, dtype=float)
    if ranks.size == 0:
        raise AnalysisError("NRRS needs at least one rank")
    if lam < 0:
        raise AnalysisError(f"NRRS lambda must be non-negative, got {lam}")
    return float(ranks.mean() + lam * ranks.std())
