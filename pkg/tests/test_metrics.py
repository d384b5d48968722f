import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textchart.metrics import (
    ConfusionMatrix,
    auroc,
    binary_report,
    classifier_report,
    harmonic_mean,
    mcc,
    precision_recall_f1,
    roc_curve,
    specificity_sensitivity,
)


def pair_count_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return total / (len(pos) * len(neg))


counts = st.integers(0, 60)
matrices = st.builds(ConfusionMatrix, counts, counts, counts, counts)


def labelled_scores(min_size=2, max_size=80):
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.tuples(
            st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]) | st.floats(0, 1), min_size=n, max_size=n),
            st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda y: 0 < sum(y) < len(y)),
        )
    )


class TestPrecisionRecall:
    def test_perfect(self):
        assert precision_recall_f1(ConfusionMatrix(tp=10)) == (1.0, 1.0, 1.0)

    def test_zero_convention(self):
        assert precision_recall_f1(ConfusionMatrix(tp=0, fp=5, fn=5)) == (0.0, 0.0, 0.0)

    def test_archived_stage2_values(self):
        p, r, f = precision_recall_f1(ConfusionMatrix(tp=447, fp=127, fn=126))
        assert p == pytest.approx(0.7787, abs=1e-4)
        assert r == pytest.approx(0.7801, abs=1e-4)
        assert f == pytest.approx(0.7794, abs=1e-4)

    @given(matrices)
    def test_matches_formula(self, cm):
        p, r, f = precision_recall_f1(cm)
        ep = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
        er = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
        assert (p, r) == (ep, er)
        assert f == (2 * ep * er / (ep + er) if ep + er else 0.0)


class TestHarmonicMean:
    @pytest.mark.parametrize("a,b,want", [(1, 1, 1), (0, 0.9, 0), (0, 0, 0)])
    def test_simple(self, a, b, want):
        assert harmonic_mean(a, b) == want

    def test_archived_stage1_value(self):
        assert harmonic_mean(0.8346213292, 0.9733210672) == pytest.approx(0.8986508911, abs=1e-9)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            harmonic_mean(-0.1, 0.5)


class TestMcc:
    def test_perfect_and_inverted(self):
        assert mcc(ConfusionMatrix(tp=5, tn=7)) == 1.0
        assert mcc(ConfusionMatrix(fp=5, fn=7)) == -1.0

    def test_archived_line_chart_training_matrix(self):
        # (52*395 - 15*2) / sqrt(67 * 54 * 410 * 397), evaluated by hand
        assert mcc(ConfusionMatrix(tp=52, fn=2, fp=15, tn=395)) == pytest.approx(20510 / 24267.30, abs=1e-6)
        assert mcc(ConfusionMatrix(tp=52, fn=2, fp=15, tn=395)) == pytest.approx(0.8452, abs=1e-4)

    def test_zero_factor(self):
        assert mcc(ConfusionMatrix(tp=4, fp=3)) == 0.0

    @given(matrices)
    def test_matches_formula_and_bounded(self, cm):
        den = (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
        want = 0.0 if den == 0 else (cm.tp * cm.tn - cm.fp * cm.fn) / math.sqrt(den)
        assert mcc(cm) == pytest.approx(want, abs=1e-15)
        assert -1.0 <= mcc(cm) <= 1.0

    @given(matrices)
    def test_class_swap_symmetry(self, cm):
        assert mcc(cm) == pytest.approx(mcc(cm.swapped()), abs=1e-15)


class TestSpecificitySensitivity:
    def test_examples(self):
        assert specificity_sensitivity(ConfusionMatrix(tn=10)) == (1.0, 0.0)
        spec, sens = specificity_sensitivity(ConfusionMatrix(tp=14, fn=1, tn=100, fp=1))
        assert spec == pytest.approx(0.990, abs=1e-3)
        assert sens == pytest.approx(0.933, abs=1e-3)

    @given(matrices)
    def test_matches_formula(self, cm):
        spec, sens = specificity_sensitivity(cm)
        assert spec == (cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp else 0.0)
        assert sens == (cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0)


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        ConfusionMatrix(tp=-1)


def test_from_labels():
    cm = ConfusionMatrix.from_labels([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (2, 1, 1, 1)


class TestAuroc:
    def test_separating(self):
        assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_equal(self):
        assert auroc([0.3] * 6, [0, 1, 0, 1, 1, 0]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auroc([0.1, 0.2], [1, 1])

    def test_random_200_matches_pair_counting(self):
        rng = np.random.default_rng(4)
        scores = rng.random(200).round(2)
        labels = rng.integers(0, 2, 200)
        assert abs(auroc(scores, labels) - pair_count_auroc(scores, labels)) < 1e-12

    @given(labelled_scores())
    @settings(max_examples=200)
    def test_pair_counting_oracle(self, data):
        scores, labels = data
        assert abs(auroc(scores, labels) - pair_count_auroc(scores, labels)) < 1e-12

    @given(labelled_scores())
    def test_reflection(self, data):
        scores, labels = data
        assert auroc(scores, labels) + auroc([-s for s in scores], labels) == pytest.approx(1.0, abs=1e-12)

    @given(labelled_scores())
    def test_monotone_transform_invariance(self, data):
        scores, labels = data
        # dense ranks: an exactly order-preserving map, free of float collapse
        ranks = np.unique(scores, return_inverse=True)[1] * 3.0 - 7.0
        assert auroc(scores, labels) == pytest.approx(auroc(ranks, labels), abs=1e-12)

    @given(labelled_scores())
    def test_roc_curve_shape(self, data):
        curve = roc_curve(*data)
        assert curve.points[0] == (0.0, 0.0)
        assert curve.points[-1] == (1.0, 1.0)
        assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)


def test_binary_report_fields():
    rep = binary_report([1, 0, 1, 0], [1, 0, 0, 0], [0.9, 0.2, 0.4, 0.1])
    assert rep["positive"]["recall"] == 0.5
    assert rep["negative"]["recall"] == 1.0
    assert rep["auroc"] == 1.0
    assert rep["harmonic_f1"] == pytest.approx(harmonic_mean(rep["positive"]["f1"], rep["negative"]["f1"]))


def test_classifier_report_threshold():
    rep = classifier_report([1, 0, 1, 0], [0.7, 0.6, 0.4, 0.1], threshold=0.5)
    assert rep["confusion"] == {"tp": 1, "fp": 1, "tn": 1, "fn": 1}
    assert rep["mcc"] == 0.0
    assert rep["auroc"] == 0.75
