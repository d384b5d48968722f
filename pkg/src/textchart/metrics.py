"""Confusion-matrix statistics, F1 variants, ROC/auROC and MCC.

Zero denominators give 0 throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion matrix counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, y_true: Sequence[int], y_pred: Sequence[int]) -> "ConfusionMatrix":
        t = np.asarray(y_true, dtype=bool)
        p = np.asarray(y_pred, dtype=bool)
        return cls(
            tp=int(np.sum(t & p)),
            fp=int(np.sum(~t & p)),
            tn=int(np.sum(~t & ~p)),
            fn=int(np.sum(t & ~p)),
        )

    def swapped(self) -> "ConfusionMatrix":
        """The same matrix seen from the other class."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]

    @property
    def fpr(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def tpr(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def harmonic_mean(a: float, b: float) -> float:
    if a < 0 or b < 0:
        raise ValueError("harmonic_mean expects non-negative inputs")
    return 2.0 * a * b / (a + b) if a + b else 0.0


def precision_recall_f1(cm: ConfusionMatrix) -> tuple[float, float, float]:
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    return precision, recall, harmonic_mean(precision, recall)


def specificity_sensitivity(cm: ConfusionMatrix) -> tuple[float, float]:
    return _ratio(cm.tn, cm.tn + cm.fp), _ratio(cm.tp, cm.tp + cm.fn)


def mcc(cm: ConfusionMatrix) -> float:
    tp, fp, tn, fn = (float(v) for v in (cm.tp, cm.fp, cm.tn, cm.fn))
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den == 0:
        return 0.0
    value = (tp * tn - fp * fn) / math.sqrt(den)
    return min(1.0, max(-1.0, value))


def _check_binary(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and of equal length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    y = y.astype(bool)
    if y.all() or not y.any():
        raise ValueError("both classes must be present")
    return s, y


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """ROC points from sweeping every distinct score as a threshold, high to low.

    Tied scores move the curve in one diagonal step.
    """
    s, y = _check_binary(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last_of_group = np.r_[np.diff(s) != 0, True]
    tps = np.cumsum(y)[last_of_group]
    fps = np.cumsum(~y)[last_of_group]
    P, N = tps[-1], fps[-1]
    points = [(0.0, 0.0)] + [(fp / N, tp / P) for tp, fp in zip(tps, fps)]
    return RocCurve(tuple((float(a), float(b)) for a, b in points))


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Area under the ROC curve by the trapezoidal rule."""
    curve = roc_curve(scores, labels)
    x, t = curve.fpr, curve.tpr
    return float(np.sum((x[1:] - x[:-1]) * (t[1:] + t[:-1]) / 2.0))


def binary_report(y_true, y_pred, scores=None) -> dict:
    """Per-class precision/recall/F1 for a binary task plus harmonic F1 and auROC."""
    cm = ConfusionMatrix.from_labels(y_true, y_pred)
    p1, r1, f1_pos = precision_recall_f1(cm)
    p0, r0, f1_neg = precision_recall_f1(cm.swapped())
    report = {
        "negative": {"precision": p0, "recall": r0, "f1": f1_neg},
        "positive": {"precision": p1, "recall": r1, "f1": f1_pos},
        "harmonic_f1": harmonic_mean(f1_neg, f1_pos),
        "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
    }
    if scores is not None:
        try:
            report["auroc"] = auroc(scores, y_true)
        except ValueError:
            report["auroc"] = None
    return report


def classifier_report(y_true, scores, threshold: float = 0.5) -> dict:
    """Specificity, sensitivity, MCC and auROC of a thresholded binary scorer."""
    scores = np.asarray(scores, dtype=np.float64)
    y_pred = (scores >= threshold).astype(int)
    cm = ConfusionMatrix.from_labels(y_true, y_pred)
    spec, sens = specificity_sensitivity(cm)
    try:
        area = auroc(scores, y_true)
    except ValueError:
        area = None
    return {
        "specificity": spec,
        "sensitivity": sens,
        "mcc": mcc(cm),
        "auroc": area,
        "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
    }
