"""AND-fusion, confusion metrics, and AUC."""

import numpy as np
import pytest

from amlpipe.data_model import LabelValue
from amlpipe.errors import (
    DataError,
    EmptyEvaluation,
    LengthMismatch,
    SingleClassTruth,
)
from amlpipe.fusion_eval import (
    ConfusionMatrix,
    auc,
    combine_and,
    confusion,
    f1_from_pr,
    metrics,
    reports_to_csv,
    reports_to_table,
)

S, N = LabelValue.SUSPICIOUS, LabelValue.NORMAL


# --- combine_and -------------------------------------------------------------

def test_combine_and_is_set_intersection():
    # classifier flags {t1,t2,t3}, anomaly flags {t2,t3,t4} over t1..t5
    a = [S, S, S, N, N]
    b = [N, S, S, S, N]
    assert combine_and(a, b) == [N, S, S, N, N]


def test_combine_and_with_all_normal_input():
    a = [S, S]
    assert combine_and(a, [N, N]) == [N, N]
    assert combine_and([N, N], a) == [N, N]


def test_combine_and_idempotent():
    f = [S, N, S, N]
    assert combine_and(f, f) == f


def test_combine_and_length_mismatch():
    with pytest.raises(LengthMismatch):
        combine_and([S], [S, N])


# --- confusion ----------------------------------------------------------------

def test_confusion_perfect_prediction():
    truth = [S, N, S, N]
    cm = confusion(truth, truth)
    assert (cm.fp, cm.fn) == (0, 0)
    assert (cm.tp, cm.tn) == (2, 2)


def test_confusion_all_positive_prediction():
    truth = [S] * 8 + [N] * 92
    cm = confusion([S] * 100, truth)
    assert (cm.tp, cm.fp, cm.tn, cm.fn) == (8, 92, 0, 0)


def test_confusion_all_negative_prediction():
    truth = [S] * 8 + [N] * 92
    cm = confusion([N] * 100, truth)
    assert (cm.tp, cm.fp) == (0, 0)
    assert (cm.tn, cm.fn) == (92, 8)


def test_confusion_rejects_unlabeled_truth():
    with pytest.raises(DataError):
        confusion([S], [LabelValue.UNLABELED])


# --- metrics -------------------------------------------------------------------

def test_metrics_hand_example():
    report = metrics(ConfusionMatrix(tp=8, fp=2, tn=85, fn=5))
    assert report.accuracy == pytest.approx(0.93)
    assert report.precision == pytest.approx(0.8)
    assert report.recall == pytest.approx(8 / 13)
    assert report.f1 == pytest.approx(16 / 23)
    assert report.warnings == ()


def test_metrics_zero_denominators_warn():
    report = metrics(ConfusionMatrix(tp=0, fp=0, tn=10, fn=0))
    assert report.precision == 0.0
    assert report.recall == 0.0
    assert report.f1 == 0.0
    assert len(report.warnings) == 3


def test_metrics_empty_evaluation():
    with pytest.raises(EmptyEvaluation):
        metrics(ConfusionMatrix(0, 0, 0, 0))


def test_metrics_match_brute_force_tally():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        pred = [S if rng.random() < 0.4 else N for _ in range(n)]
        truth = [S if rng.random() < 0.3 else N for _ in range(n)]
        report = metrics(confusion(pred, truth))
        tp = sum(p is S and t is S for p, t in zip(pred, truth))
        fp = sum(p is S and t is N for p, t in zip(pred, truth))
        tn = sum(p is N and t is N for p, t in zip(pred, truth))
        fn = sum(p is N and t is S for p, t in zip(pred, truth))
        assert abs(report.accuracy - (tp + tn) / n) < 1e-12
        if tp + fp:
            assert abs(report.precision - tp / (tp + fp)) < 1e-12
        if tp + fn:
            assert abs(report.recall - tp / (tp + fn)) < 1e-12
        if report.precision + report.recall:
            expected = (
                2 * report.precision * report.recall
                / (report.precision + report.recall)
            )
            assert abs(report.f1 - expected) < 1e-9


def test_f1_matches_published_operating_points():
    assert f1_from_pr(0.904, 0.912) == pytest.approx(0.907, abs=1e-3)
    assert f1_from_pr(0.939, 0.899) == pytest.approx(0.919, abs=1e-3)


# --- AUC -------------------------------------------------------------------------

def test_auc_perfect_ranking():
    assert auc([0.9, 0.8, 0.3, 0.1], [S, S, N, N]) == 1.0


def test_auc_three_quarters():
    assert auc([0.9, 0.6, 0.4, 0.1], [S, N, S, N]) == pytest.approx(0.75)


def test_auc_all_ties_is_half():
    assert auc([0.5] * 6, [S, N, S, N, S, N]) == pytest.approx(0.5)


def test_auc_single_class_error():
    with pytest.raises(SingleClassTruth):
        auc([0.1, 0.2], [S, S])


def test_auc_invariant_under_increasing_transform():
    rng = np.random.default_rng(1)
    scores = rng.normal(0, 1, 200)
    truth = [S if rng.random() < 0.3 else N for _ in range(200)]
    base = auc(scores, truth)
    assert auc(np.exp(scores), truth) == pytest.approx(base, abs=1e-12)
    assert auc(3 * scores + 7, truth) == pytest.approx(base, abs=1e-12)


# --- report emission ---------------------------------------------------------------

def test_report_csv_layout():
    report = metrics(ConfusionMatrix(tp=8, fp=2, tn=85, fn=5), model="demo",
                     auc_value=0.9, seed=42)
    text = reports_to_csv([report])
    lines = text.splitlines()
    assert lines[0] == "model,accuracy,precision,recall,f1,auc,tp,fp,tn,fn,seed"
    assert lines[1].startswith("demo,0.930000,0.800000,")
    assert lines[1].endswith(",8,2,85,5,42")
    # no timestamps anywhere (reports must be byte-stable)
    assert "T" not in lines[1].split(",")[1]


def test_report_table_is_aligned():
    r1 = metrics(ConfusionMatrix(8, 85, 2, 5), model="a")
    r2 = metrics(ConfusionMatrix(80, 850, 20, 50), model="longer-name")
    table = reports_to_table([r1, r2]).splitlines()
    assert len({line.index("accuracy") if "accuracy" in line else -1
                for line in table[:1]}) == 1
    assert table[1].startswith("a")
    assert table[2].startswith("longer-name")
