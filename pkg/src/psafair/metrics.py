"""Fairness and accuracy metrics computed from thresholded predictions.

Group ``0`` is the protected minority and group ``1`` the majority. Every
metric that can hit a zero denominator raises :class:`DegenerateDenominator`
instead of returning ``inf`` or ``nan``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ObjectiveValues
from .errors import DegenerateClass, DegenerateDenominator, NonBinaryColumn, ShapeMismatch

LOG_LOSS_EPS = 1e-12
FOUR_FIFTHS = 0.8


@dataclass(frozen=True)
class GroupConfusion:
    tp_0: int
    fp_0: int
    tn_0: int
    fn_0: int
    tp_1: int
    fp_1: int
    tn_1: int
    fn_1: int

    def group(self, g: int) -> tuple[int, int, int, int]:
        """``(tp, fp, tn, fn)`` for group ``g``."""
        if g == 0:
            return self.tp_0, self.fp_0, self.tn_0, self.fn_0
        if g == 1:
            return self.tp_1, self.fp_1, self.tn_1, self.fn_1
        raise ValueError(f"group must be 0 or 1, got {g}")

    def group_size(self, g: int) -> int:
        return sum(self.group(g))

    @property
    def n_samples(self) -> int:
        return self.group_size(0) + self.group_size(1)

    def swap_groups(self) -> "GroupConfusion":
        return GroupConfusion(*self.group(1), *self.group(0))


def _binary(name: str, a) -> np.ndarray:
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ShapeMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.dtype != np.bool_ and not np.isin(arr, (0, 1)).all():
        raise NonBinaryColumn(f"{name} must contain only 0 and 1")
    return arr.astype(np.int64)


def confusion(y_true, y_pred, s) -> GroupConfusion:
    y_true = _binary("y_true", y_true)
    y_pred = _binary("y_pred", y_pred)
    s = _binary("s", s)
    if not (y_true.shape == y_pred.shape == s.shape):
        raise ShapeMismatch(
            f"length mismatch: y_true={y_true.size}, y_pred={y_pred.size}, s={s.size}"
        )
    return _confusion(y_true, y_pred, s)


def _confusion(y_true: np.ndarray, y_pred: np.ndarray, s: np.ndarray) -> GroupConfusion:
    return confusion_from_cells(cell_base(y_true, s) + y_pred)


def cell_base(y_true: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``4*s + 2*y``; adding a 0/1 prediction gives the confusion cell index."""
    return 4 * np.asarray(s, dtype=np.int64) + 2 * np.asarray(y_true, dtype=np.int64)


def confusion_from_cells(cells: np.ndarray) -> GroupConfusion:
    # cell = 4*s + 2*y + yhat  ->  per group: tn, fp, fn, tp
    c = np.bincount(cells, minlength=8).tolist()
    return GroupConfusion(
        tp_0=c[3], fp_0=c[1], tn_0=c[0], fn_0=c[2],
        tp_1=c[7], fp_1=c[5], tn_1=c[4], fn_1=c[6],
    )


def positive_rate(gc: GroupConfusion, g: int) -> float:
    """P[prediction = 1 | group = g]."""
    tp, fp, tn, fn = gc.group(g)
    n = tp + fp + tn + fn
    if n == 0:
        raise DegenerateDenominator(f"group {g} is empty")
    return (tp + fp) / n


def base_rate(gc: GroupConfusion, g: int) -> float:
    """P[target = 1 | group = g]."""
    tp, fp, tn, fn = gc.group(g)
    n = tp + fp + tn + fn
    if n == 0:
        raise DegenerateDenominator(f"group {g} is empty")
    return (tp + fn) / n


def disparate_impact(gc: GroupConfusion) -> float:
    """Minority positive-prediction rate over majority positive-prediction rate.

    Values below :data:`FOUR_FIFTHS` fail the 80% rule.
    """
    minority = positive_rate(gc, 0)
    majority = positive_rate(gc, 1)
    if majority == 0:
        raise DegenerateDenominator("majority group has no positive predictions")
    return minority / majority


def underestimation_score(gc: GroupConfusion) -> float:
    """Predicted over actual desirable-outcome rate for the minority.

    Below 1 the classifier under-predicts the desirable outcome for group 0.
    """
    predicted = positive_rate(gc, 0)
    actual = base_rate(gc, 0)
    if actual == 0:
        raise DegenerateDenominator("minority group has no actual positives")
    return predicted / actual


def balanced_accuracy(gc: GroupConfusion) -> float:
    """Mean of true-positive and true-negative rate, pooled over both groups."""
    tp = gc.tp_0 + gc.tp_1
    fn = gc.fn_0 + gc.fn_1
    tn = gc.tn_0 + gc.tn_1
    fp = gc.fp_0 + gc.fp_1
    if tp + fn == 0 or tn + fp == 0:
        raise DegenerateClass("balanced accuracy needs both classes present in y_true")
    return 0.5 * (tp / (tp + fn) + tn / (tn + fp))


def log_loss(y_true, p) -> float:
    """Mean binary cross-entropy with probabilities clipped to ``[eps, 1 - eps]``."""
    y = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1:
        raise ShapeMismatch(f"y_true shape {y.shape} does not match p shape {p.shape}")
    if y.size == 0:
        raise ShapeMismatch("log_loss of an empty sample")
    p = np.clip(p, LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def objectives_from_confusion(gc: GroupConfusion) -> ObjectiveValues:
    us = underestimation_score(gc)
    return ObjectiveValues(ba=balanced_accuracy(gc), us_dev=abs(1.0 - us), us_raw=us)


def objectives(y_true, y_pred, s) -> ObjectiveValues:
    return objectives_from_confusion(confusion(y_true, y_pred, s))
