# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Confusion counts and the classification metric report.

Undefined ratios (0/0) are 0. Integrated_Score is the unweighted mean of the
ten base metrics in BASE_METRICS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import classify

BASE_METRICS = (
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
)
METRIC_COLUMNS = BASE_METRICS + ("Integrated_Score", "F1_class0", "F1_class1")


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: tuple[int, ...]
    fp: tuple[int, ...]
    fn: tuple[int, ...]
    tn: tuple[int, ...]

    @property
    def n_classes(self) -> int:
        return len(self.tp)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(t + f for t, f in zip(self.tp, self.fn, strict=True))

    @property
    def total(self) -> int:
        return self.tp[0] + self.fp[0] + self.fn[0] + self.tn[0]


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(precision: float, recall: float) -> float:
    return _ratio(2 * precision * recall, precision + recall)


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    integrated_score: float
    class_precision: tuple[float, ...]
    class_recall: tuple[float, ...]
    class_f1: tuple[float, ...]

    def base_values(self) -> tuple[float, ...]:
        return (
            self.accuracy,
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.weighted_precision,
            self.weighted_recall,
            self.weighted_f1,
            self.micro_precision,
            self.micro_recall,
            self.micro_f1,
        )

    def as_row(self) -> dict[str, float]:
        """The merged-CSV metric columns, in METRIC_COLUMNS order."""
        row = dict(zip(BASE_METRICS, self.base_values(), strict=True))
        row["Integrated_Score"] = self.integrated_score
        row["F1_class0"] = self.class_f1[0]
        row["F1_class1"] = self.class_f1[1]
        return row


def confusion(y_true, y_pred, n_classes: int = 2) -> ConfusionCounts:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if len(y_true) != len(y_pred):
        raise MetricsError(f"length mismatch: {len(y_true)} true labels, {len(y_pred)} predictions")
    if len(y_true) == 0:
        raise MetricsError("no labels to score")
    for name, values in (("y_true", y_true), ("y_pred", y_pred)):
        if values.min() < 0 or values.max() >= n_classes:
            raise MetricsError(f"{name} has labels outside [0, {n_classes})")

    matrix = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(matrix, (y_true, y_pred), 1)
    total = int(matrix.sum())
    tp = np.diag(matrix)
    fp = matrix.sum(axis=0) - tp
    fn = matrix.sum(axis=1) - tp
    tn = total - tp - fp - fn
    return ConfusionCounts(*(tuple(int(v) for v in arr) for arr in (tp, fp, fn, tn)))


def integrated_score(report: MetricReport) -> float:
    return float(np.mean(report.base_values()))


def metric_report(counts: ConfusionCounts) -> MetricReport:
    if counts.total <= 0:
        raise MetricsError("empty confusion counts")
    classes = range(counts.n_classes)
    precision = tuple(_ratio(counts.tp[c], counts.tp[c] + counts.fp[c]) for c in classes)
    recall = tuple(_ratio(counts.tp[c], counts.tp[c] + counts.fn[c]) for c in classes)
    f1 = tuple(_f1(p, r) for p, r in zip(precision, recall, strict=True))
    weights = np.asarray(counts.support, dtype=float) / counts.total

    tp, fp, fn = sum(counts.tp), sum(counts.fp), sum(counts.fn)
    micro_p = _ratio(tp, tp + fp)
    micro_r = _ratio(tp, tp + fn)

    partial = MetricReport(
        accuracy=tp / counts.total,
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        weighted_precision=float(weights @ precision),
        weighted_recall=float(weights @ recall),
        weighted_f1=float(weights @ f1),
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=_f1(micro_p, micro_r),
        integrated_score=0.0,
        class_precision=precision,
        class_recall=recall,
        class_f1=f1,
    )
    return MetricReport(**{**partial.__dict__, "integrated_score": integrated_score(partial)})


def evaluate(y_true, probabilities, threshold: float) -> MetricReport:
    """classify + confusion + metric_report."""
    return metric_report(confusion(y_true, classify(probabilities, threshold), 2))
