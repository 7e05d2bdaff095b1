import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from sklearn import metrics as skm

from focalzone.exceptions import ValidationError
from focalzone.metrics import (auc, classification_report, confusion_matrix, pearson, roc_auc, roc_curve,
                               t_two_sided_p)


def test_confusion_matrix():
    cm = confusion_matrix([0, 1, 1, 2], [0, 2, 1, 2], 3)
    assert cm.tolist() == [[1, 0, 0], [0, 1, 1], [0, 0, 1]]
    with pytest.raises(ValidationError):
        confusion_matrix([0, 3], [0, 1], 3)


def test_report_from_pairs_matches_sklearn():
    rng = np.random.default_rng(0)
    t, p = rng.integers(0, 4, 200), rng.integers(0, 4, 200)
    rep = classification_report(list(zip(t, p)))
    assert rep.accuracy == pytest.approx(skm.accuracy_score(t, p))
    assert rep.precision_macro == pytest.approx(skm.precision_score(t, p, average="macro"))
    assert rep.recall_macro == pytest.approx(skm.recall_score(t, p, average="macro"))
    assert rep.f1_macro == pytest.approx(skm.f1_score(t, p, average="macro"))


def test_undefined_ratios_are_zero():
    rep = classification_report(y_true=[0, 0, 1], y_pred=[0, 0, 0], n_classes=3)
    assert rep.precision.tolist()[1:] == [0.0, 0.0]
    assert rep.f1[2] == 0.0


def test_empty_report_rejected():
    with pytest.raises(ValidationError):
        classification_report([])


def test_roc_tied_scores_form_one_step():
    fpr, tpr = roc_curve([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
    assert fpr.tolist() == [0.0, 1.0] and tpr.tolist() == [0.0, 1.0]
    assert auc(fpr, tpr) == 0.5


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=40))
def test_auc_matches_sklearn(pairs):
    scores, pos = zip(*pairs)
    if len(set(pos)) < 2:
        return
    fpr, tpr = roc_curve(scores, pos)
    assert auc(fpr, tpr) == pytest.approx(skm.roc_auc_score(pos, scores), abs=1e-12)


def test_roc_auc_skips_absent_classes():
    proba = np.array([[0.8, 0.1, 0.1], [0.2, 0.7, 0.1], [0.6, 0.3, 0.1]])
    rep = roc_auc(proba, [0, 1, 0])
    assert rep.skipped == [2]
    assert rep.auc_macro == pytest.approx(1.0)


def test_pearson_matches_scipy():
    rng = np.random.default_rng(4)
    x = rng.normal(size=12)
    y = x + rng.normal(size=12)
    rep = pearson(x, y)
    ref = stats.pearsonr(x, y)
    assert rep.r == pytest.approx(ref.statistic, abs=1e-12)
    assert rep.p_two_sided == pytest.approx(ref.pvalue, rel=1e-9)


def test_pearson_perfect_and_degenerate():
    rep = pearson([1, 2, 3, 4], [2, 4, 6, 8])
    assert rep.r == 1.0 and math.isinf(rep.t_stat) and rep.p_two_sided == 0.0
    with pytest.raises(ValidationError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValidationError):
        pearson([1, 2], [1, 2])


@pytest.mark.parametrize("t,df", [(0.0, 3), (1.5, 6), (3.707, 6), (-2.2, 20)])
def test_t_p_value_matches_scipy(t, df):
    assert t_two_sided_p(t, df) == pytest.approx(2 * stats.t.sf(abs(t), df), rel=1e-10)
