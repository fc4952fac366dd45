# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Tests for metrics.py: confusion counting and the metric report."""

import numpy as np
import pytest

from branchlab.metrics import METRIC_COLUMNS, MetricsError, confusion, evaluate, metric_report
from branchlab.models import classify


class TestConfusion:
    def test_perfect_predictions(self):
        counts = confusion([0, 1, 1, 0], [0, 1, 1, 0])
        assert counts.fp == (0, 0)
        assert counts.fn == (0, 0)

    def test_direct_counting(self):
        counts = confusion([0, 0, 0, 1], [0, 0, 1, 1])
        assert (counts.tp[1], counts.fp[1], counts.fn[1]) == (1, 1, 0)
        assert (counts.tp[0], counts.fp[0], counts.fn[0], counts.tn[0]) == (2, 0, 1, 1)
        assert counts.support == (3, 1)
        assert counts.total == 4

    def test_empty_predictions(self):
        with pytest.raises(MetricsError):
            confusion([0, 0, 0, 1], [])

    def test_no_labels(self):
        with pytest.raises(MetricsError):
            confusion([], [])

    def test_label_out_of_range(self):
        with pytest.raises(MetricsError):
            confusion([0, 2], [0, 1])


class TestMetricReport:
    def test_perfect_predictions_score_one(self):
        report = metric_report(confusion([0, 1, 1, 0, 1], [0, 1, 1, 0, 1]))
        assert all(v == 1.0 for v in report.base_values())
        assert report.integrated_score == 1.0

    def test_one_false_positive(self):
        report = metric_report(confusion([0, 0, 0, 1], [0, 0, 1, 1]))
        assert report.accuracy == pytest.approx(0.75)
        assert report.class_f1 == pytest.approx((0.8, 0.6667), abs=1e-4)
        assert report.macro_f1 == pytest.approx(0.7333, abs=1e-4)
        assert report.weighted_f1 == pytest.approx(0.7667, abs=1e-4)
        assert report.micro_f1 == pytest.approx(0.75)
        assert report.integrated_score == pytest.approx(0.7708, abs=1e-4)

    def test_majority_vote(self):
        report = metric_report(confusion([0, 0, 0, 1], [0, 0, 0, 0]))
        assert report.accuracy == pytest.approx(0.75)
        assert report.class_f1 == pytest.approx((0.8571, 0.0), abs=1e-4)
        assert report.macro_f1 == pytest.approx(0.4286, abs=1e-4)
        assert report.class_precision[1] == 0.0

    def test_micro_metrics_equal_accuracy(self):
        report = metric_report(confusion([0, 1, 1, 0, 1, 1], [1, 1, 0, 0, 1, 1]))
        assert report.micro_precision == report.micro_recall == report.micro_f1 == pytest.approx(report.accuracy)

    def test_all_values_in_unit_interval(self):
        report = metric_report(confusion([1, 1, 1, 0], [0, 0, 0, 1]))
        assert all(0.0 <= v <= 1.0 for v in report.as_row().values())

    def test_row_columns(self):
        row = metric_report(confusion([0, 1], [0, 1])).as_row()
        assert tuple(row) == METRIC_COLUMNS


class TestEvaluate:
    def test_threshold_is_inclusive(self):
        report = evaluate([0, 1, 1], [0.2, 0.5, 0.9], threshold=0.5)
        assert report.accuracy == 1.0

    def test_lower_threshold_changes_predictions(self):
        report = evaluate([0, 1], [0.40, 0.9], threshold=0.35)
        assert report.accuracy == 0.5

    def test_matches_classify_then_report(self):
        rng = np.random.default_rng(2)
        y_true = rng.integers(0, 2, 50)
        probs = rng.uniform(size=50)
        for threshold in (0.35, 0.5, 0.65):
            expected = metric_report(confusion(y_true, classify(probs, threshold)))
            assert evaluate(y_true, probs, threshold).as_row() == expected.as_row()


class TestLabelPermutation:
    @pytest.mark.parametrize("seed", range(5))
    def test_swapping_classes_keeps_accuracy_and_macro_metrics(self, seed):
        rng = np.random.default_rng(seed)
        y_true = rng.integers(0, 2, 40)
        y_pred = np.where(rng.uniform(size=40) < 0.7, y_true, 1 - y_true)
        report = metric_report(confusion(y_true, y_pred))
        swapped = metric_report(confusion(1 - y_true, 1 - y_pred))
        assert swapped.accuracy == pytest.approx(report.accuracy, abs=1e-12)
        assert swapped.macro_precision == pytest.approx(report.macro_precision, abs=1e-12)
        assert swapped.macro_recall == pytest.approx(report.macro_recall, abs=1e-12)
        assert swapped.macro_f1 == pytest.approx(report.macro_f1, abs=1e-12)
        assert swapped.class_f1 == pytest.approx(report.class_f1[::-1], abs=1e-12)
