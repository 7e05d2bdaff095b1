"""Evaluation metrics: confusion matrix, macro P/R/F1, one-vs-rest ROC, Pearson."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .exceptions import ValidationError


def confusion_matrix(y_true, y_pred, n_classes=None) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape or t.size == 0:
        raise ValidationError("need equally long, non-empty label sequences")
    C = int(max(t.max(), p.max()) + 1) if n_classes is None else int(n_classes)
    if min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= C:
        raise ValidationError(f"labels must lie in [0, {C})")
    cm = np.zeros((C, C), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass
class ClassificationReport:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    confusion: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray


def classification_report(pairs=None, *, y_true=None, y_pred=None, n_classes=None) -> ClassificationReport:
    """Accuracy and macro-averaged precision, recall and F1.

    Pass either ``pairs`` of ``(true, predicted)`` or ``y_true``/``y_pred``.
    Undefined ratios (0/0) count as 0.
    """
    if pairs is not None:
        pairs = list(pairs)
        if not pairs:
            raise ValidationError("classification_report needs at least one pair")
        y_true, y_pred = zip(*pairs)
    if y_true is None or len(y_true) == 0:
        raise ValidationError("classification_report needs at least one pair")
    cm = confusion_matrix(y_true, y_pred, n_classes)
    tp = np.diag(cm).astype(np.float64)
    precision = _safe_div(tp, cm.sum(axis=0))
    recall = _safe_div(tp, cm.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return ClassificationReport(
        accuracy=float(tp.sum() / cm.sum()),
        precision_macro=float(precision.mean()),
        recall_macro=float(recall.mean()),
        f1_macro=float(f1.mean()),
        confusion=cm,
        precision=precision,
        recall=recall,
        f1=f1,
        support=cm.sum(axis=1),
    )


def roc_curve(scores, positive):
    """ROC points for a binary problem; tied scores form a single step."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positive, dtype=bool)
    P, N = int(pos.sum()), int((~pos).sum())
    if P == 0 or N == 0:
        raise ValidationError("ROC needs at least one positive and one negative")
    order = np.argsort(-s, kind="mergesort")
    s, pos = s[order], pos[order]
    last_of_group = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tps = np.cumsum(pos)[last_of_group]
    fps = (last_of_group + 1) - tps
    fpr = np.r_[0.0, fps / N]
    tpr = np.r_[0.0, tps / P]
    return fpr, tpr


def auc(fpr, tpr) -> float:
    return float(np.trapezoid(tpr, fpr))


@dataclass
class ROCReport:
    curves: dict = field(default_factory=dict)  # class -> (fpr, tpr)
    auc: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    @property
    def auc_macro(self) -> float:
        return float(np.mean(list(self.auc.values())))


def roc_auc(proba, y_true) -> ROCReport:
    """One-vs-rest ROC and AUC per class plus the macro average.

    Classes without both positives and negatives are skipped and listed in
    ``skipped``.
    """
    P = np.atleast_2d(np.asarray(proba, dtype=np.float64))
    y = np.asarray(y_true, dtype=np.int64)
    if P.shape[0] != y.size or y.size == 0:
        raise ValidationError("need one probability row per label")
    if np.unique(y).size < 2:
        raise ValidationError("ROC needs samples from at least two classes")
    rep = ROCReport()
    for c in range(P.shape[1]):
        pos = y == c
        if pos.all() or not pos.any():
            rep.skipped.append(c)
            continue
        fpr, tpr = roc_curve(P[:, c], pos)
        rep.curves[c] = (fpr, tpr)
        rep.auc[c] = auc(fpr, tpr)
    return rep


@dataclass(frozen=True)
class CorrelationReport:
    r: float
    n: int
    t_stat: float
    p_two_sided: float


def t_two_sided_p(t: float, df: int) -> float:
    """Two-sided Student-t tail probability via the regularized incomplete beta."""
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def pearson(x, y) -> CorrelationReport:
    """Sample correlation with a t-test on ``n - 2`` degrees of freedom."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("pearson needs two 1-D sequences of equal length")
    n = x.size
    if n < 3:
        raise ValidationError(f"pearson needs at least 3 points, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValidationError("pearson is undefined for a constant sequence")
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    df = n - 2
    t = math.copysign(math.inf, r) if abs(r) == 1.0 else r * math.sqrt(df / (1.0 - r * r))
    return CorrelationReport(r, n, t, t_two_sided_p(t, df))
