"""Acceptance suite: every exit criterion at its stated tolerance.

Each criterion is one test; `pytest -v` therefore emits one pass/fail line
per criterion. The calibrated benchmark (100k rows, suspicious rate 0.08,
master seed 42, all six classifiers + isolation forest) runs once and backs
the fusion, precision-improvement, runtime, and qualitative checks.
"""

import hashlib
import math
import time
import warnings

import numpy as np
import pytest

from amlpipe import anomaly
from amlpipe.classifiers import ModelKind, gradient_check
from amlpipe.cli import main
from amlpipe.data_model import (
    CustomerType,
    LabelValue,
    ProductType,
    save_transactions,
)
from amlpipe.cluster import elbow_select
from amlpipe.fusion_eval import auc, confusion, f1_from_pr, metrics
from amlpipe.pipeline import PipelineConfig, run_pipeline
from amlpipe.preprocess import SmoteConfig, smote_augment
from amlpipe.synth_gen import GeneratorConfig, generate
from amlpipe.weak_label import (
    ABSTAIN,
    LabelMatrix,
    LabelModel,
    apply_lfs,
    builtin_lfs,
    majority_vote,
    weighted_vote,
)

from _fixtures import make_record, numbered

S, N = LabelValue.SUSPICIOUS, LabelValue.NORMAL

BENCHMARK_BUDGET_SECONDS = 300.0


@pytest.fixture(scope="module")
def benchmark():
    """The default seeded synthetic benchmark: n=100000, suspicious_rate
    0.08, master seed 42, all six classifiers, isolation-forest detector."""
    config = PipelineConfig(n_rows=100_000, suspicious_rate=0.08, seed=42)
    start = time.perf_counter()
    result = run_pipeline(config)
    elapsed = time.perf_counter() - start
    return result, elapsed


# -- criterion: metric oracle equivalence -----------------------------------

def test_metric_oracle_equivalence_1000_instances():
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(1, 50))
        pred = [S if rng.random() < 0.4 else N for _ in range(n)]
        truth = [S if rng.random() < 0.3 else N for _ in range(n)]
        report = metrics(confusion(pred, truth))

        tp = sum(p is S and t is S for p, t in zip(pred, truth))
        fp = sum(p is S and t is N for p, t in zip(pred, truth))
        tn = sum(p is N and t is N for p, t in zip(pred, truth))
        fn = sum(p is N and t is S for p, t in zip(pred, truth))
        assert (report.tp, report.fp, report.tn, report.fn) == (tp, fp, tn, fn)
        assert abs(report.accuracy - (tp + tn) / n) < 1e-12
        expected_precision = tp / (tp + fp) if tp + fp else 0.0
        expected_recall = tp / (tp + fn) if tp + fn else 0.0
        assert abs(report.precision - expected_precision) < 1e-12
        assert abs(report.recall - expected_recall) < 1e-12
        if report.precision + report.recall > 0:
            harmonic = (
                2 * report.precision * report.recall
                / (report.precision + report.recall)
            )
            assert abs(report.f1 - harmonic) < 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"metric oracle sweep took {elapsed:.2f}s"


# -- criterion: paper-consistency check --------------------------------------

def test_paper_consistency_f1_operating_points():
    assert abs(f1_from_pr(0.904, 0.912) - 0.907) <= 0.001
    assert abs(f1_from_pr(0.939, 0.899) - 0.919) <= 0.001


# -- criterion: fusion intersection laws --------------------------------------

def test_fusion_intersection_laws_exact(benchmark):
    result, _ = benchmark
    best, detector = result.fusion_members
    fusion_name = f"and({best}+{detector})"
    positives = {
        name: {i for i, f in enumerate(flags) if f is S}
        for name, flags in result.test_flags.items()
    }
    assert positives[fusion_name] <= positives[best]
    assert positives[fusion_name] <= positives[detector]
    assert positives[fusion_name] == positives[best] & positives[detector]

    reports = {r.model: r for r in result.reports}
    assert reports[fusion_name].fp <= min(reports[best].fp, reports[detector].fp)
    assert reports[fusion_name].tp <= min(reports[best].tp, reports[detector].tp)
    assert reports[fusion_name].recall <= min(
        reports[best].recall, reports[detector].recall
    )


# -- published marginal on the benchmark dataset --------------------------------

def test_benchmark_domestic_share_at_scale(benchmark):
    result, _ = benchmark
    cols = result.dataset.columns
    domestic = ((cols.country_origin == "AUS") & (cols.country_dest == "AUS")).sum()
    assert domestic >= 95_000


# -- criterion: precision-improvement benchmark --------------------------------

def test_precision_improvement_benchmark(benchmark):
    result, elapsed = benchmark
    assert elapsed < BENCHMARK_BUDGET_SECONDS, f"benchmark took {elapsed:.0f}s"

    reports = {r.model: r for r in result.reports}
    best, detector = result.fusion_members
    fusion = reports[f"and({best}+{detector})"]
    assert fusion.precision > reports[best].precision
    assert fusion.precision > reports[detector].precision
    assert fusion.f1 >= reports[detector].f1 - 0.02


# -- criterion: soft qualitative check (non-blocking) ---------------------------

def test_soft_qualitative_classifier_ordering(benchmark):
    result, _ = benchmark
    classifier_names = {k.value for k in ModelKind}
    classifier_reports = [r for r in result.reports if r.model in classifier_names]
    by_accuracy = max(classifier_reports, key=lambda r: r.accuracy)
    by_recall = max(classifier_reports, key=lambda r: r.recall)
    nn_best_accuracy = by_accuracy.model == ModelKind.NEURAL_NETWORK.value
    rf_best_recall = by_recall.model == ModelKind.RANDOM_FOREST.value
    warnings.warn(
        "qualitative check (reported, non-blocking): "
        f"highest accuracy = {by_accuracy.model} "
        f"(neural_net expected: {'yes' if nn_best_accuracy else 'NO'}); "
        f"highest recall = {by_recall.model} "
        f"(random_forest expected: {'yes' if rf_best_recall else 'NO'})",
        stacklevel=1,
    )


# -- criterion: gradient checks --------------------------------------------------

def test_gradient_checks_within_tolerance():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    X = rng.normal(0.0, 1.0, (12, 6))
    y = rng.integers(0, 2, 12)
    assert gradient_check(ModelKind.LOGISTIC_REGRESSION, X, y) < 1e-6

    X_nn = rng.normal(0.0, 1.0, (15, 8))
    y_nn = rng.integers(0, 2, 15)
    assert gradient_check(ModelKind.NEURAL_NETWORK, X_nn, y_nn) < 1e-4
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"gradient checks took {elapsed:.2f}s"


# -- criterion: SMOTE properties ---------------------------------------------------

def test_smote_ratio_collinearity_and_bounding_box():
    rng = np.random.default_rng(2)
    X_minority = rng.uniform(-2, 3, (60, 4))
    X = np.vstack([X_minority, rng.normal(10, 1, (500, 4))])
    y = np.array([1] * 60 + [0] * 500)
    X_aug, y_aug = smote_augment(X, y, SmoteConfig(k_neighbors=5, seed=3))

    n_min = int((y_aug == 1).sum())
    n_maj = int((y_aug == 0).sum())
    assert abs(n_min - n_maj) <= 1  # class ratio 1.0 within one row

    synthetic = X_aug[len(X):]
    lower = X_minority.min(axis=0)
    upper = X_minority.max(axis=0)
    assert np.all(synthetic >= lower - 1e-9)
    assert np.all(synthetic <= upper + 1e-9)

    # Collinearity: each synthetic point lies on a segment between two
    # minority rows (distance to the best segment under 1e-9), checked by
    # brute force over all minority pairs.
    pair_i, pair_j = np.triu_indices(len(X_minority), k=1)
    a = X_minority[pair_i]
    b = X_minority[pair_j]
    ab = b - a
    ab_norm2 = np.maximum((ab**2).sum(axis=1), 1e-300)
    for point in synthetic:
        t = np.clip(((point - a) * ab).sum(axis=1) / ab_norm2, 0.0, 1.0)
        closest = a + t[:, None] * ab
        gaps = np.linalg.norm(closest - point, axis=1)
        assert gaps.min() < 1e-9, "synthetic point not on any minority segment"


# -- criterion: anomaly detectors ---------------------------------------------------

def test_anomaly_blob_auc_floors():
    rng = np.random.default_rng(42)
    blob = rng.normal(0.0, 1.0, (2000, 2))
    angles = rng.uniform(0.0, 2.0 * math.pi, 20)
    outliers = 8.0 * np.column_stack([np.cos(angles), np.sin(angles)])
    X_all = np.vstack([blob, outliers])
    truth = [N] * 2000 + [S] * 20

    iforest = anomaly.fit_iforest(blob, t=100, psi=256, seed=0)
    assert auc(anomaly.anomaly_score(iforest, X_all), truth) >= 0.95

    gaussian = anomaly.fit_gaussian(blob)
    assert auc(-anomaly.log_density(gaussian, X_all), truth) >= 0.99


def test_select_epsilon_equals_exhaustive_scan_on_cv_sets():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        model = anomaly.fit_gaussian(rng.normal(0.0, 1.0, (400, 3)))
        X_cv = np.vstack(
            [rng.normal(0.0, 1.0, (184, 3)), rng.normal(0.0, 1.0, (16, 3)) * 3 + 6]
        )
        y_cv = np.array([0] * 184 + [1] * 16)
        assert len(X_cv) == 200
        eps = anomaly.select_epsilon(model, X_cv, y_cv)
        densities = anomaly.log_density(model, X_cv)

        def f1_at(threshold):
            flagged = densities < threshold
            tp = int((flagged & (y_cv == 1)).sum())
            fp = int((flagged & (y_cv == 0)).sum())
            fn = int((~flagged & (y_cv == 1)).sum())
            denominator = 2 * tp + fp + fn
            return 2 * tp / denominator if denominator else 0.0

        exhaustive = max(f1_at(t) for t in np.unique(densities))
        exhaustive = max(exhaustive, f1_at(densities.max() + 1.0))
        assert abs(f1_at(eps) - exhaustive) < 1e-12, f"seed {seed}"


# -- criterion: weak labeling -----------------------------------------------------

def _rule_fixture_records():
    """One record per rule, engineered to fire exactly that rule."""
    return [
        # 1 cash_large
        make_record(product_type=ProductType.CASH_IN, amount=15000,
                    avg_amount_prev_month=14000),
        # 2 fatf_origin
        make_record(product_type=ProductType.GLOBAL_PAYMENT, country_origin="PAK",
                    amount=12000, avg_amount_prev_month=11000),
        # 3 wildlife_origin (organisation keeps rules 8-10 silent; the
        # 25k > 2 * 22k velocity condition fails)
        make_record(product_type=ProductType.GLOBAL_PAYMENT, country_origin="KEN",
                    amount=25000, avg_amount_prev_month=22000,
                    customer_type=CustomerType.ORGANISATION),
        # 4 fatf_dest
        make_record(product_type=ProductType.GLOBAL_PAYMENT, country_dest="SYR",
                    amount=12000, avg_amount_prev_month=11500),
        # 5 wildlife_dest
        make_record(product_type=ProductType.GLOBAL_PAYMENT, country_dest="VNM",
                    amount=25000, avg_amount_prev_month=23000,
                    customer_type=CustomerType.TRUST),
        # 6 statement_keyword
        make_record(statement="transfer hijack fund", amount=6000,
                    avg_amount_prev_month=5800),
        # 7 category_keyword
        make_record(statement="casino night out", amount=6000,
                    avg_amount_prev_month=5900),
        # 8 individual_velocity
        make_record(customer_type=CustomerType.INDIVIDUAL, amount=12000,
                    avg_amount_prev_month=1000),
        # 9 org_velocity
        make_record(customer_type=CustomerType.ASSOCIATION, amount=25000,
                    avg_amount_prev_month=5000),
        # 10 low_credit_large
        make_record(customer_type=CustomerType.INDIVIDUAL, credit_score=0.04,
                    amount=25000, avg_amount_prev_month=24000),
    ]


def test_builtin_rules_fire_exactly_on_their_fixtures():
    dataset = numbered(_rule_fixture_records())
    matrix = apply_lfs(dataset, builtin_lfs())
    expected = np.full((10, 10), ABSTAIN, dtype=np.int8)
    np.fill_diagonal(expected, 1)
    assert np.array_equal(matrix.votes, expected), (
        f"votes:\n{matrix.votes}\nexpected:\n{expected}"
    )


def test_builtin_rules_fire_on_planted_generator_scenarios():
    dataset, _, tags = generate(GeneratorConfig(n_rows=6000, seed=21))
    matrix = apply_lfs(dataset, builtin_lfs())
    fired = (matrix.votes == 1).sum(axis=1)
    from amlpipe.synth_gen import SUSPICIOUS_TAGS, ScenarioTag

    rule_tags = set(SUSPICIOUS_TAGS) - {ScenarioTag.STEALTH_LAUNDERING}
    for i, tag in enumerate(tags):
        if tag in rule_tags or tag is ScenarioTag.BENIGN_LOOKALIKE:
            assert fired[i] >= 1
        else:
            assert fired[i] == 0


def test_weighted_vote_matches_or_beats_majority_enumeration():
    w = np.array([math.log(0.9 / 0.1), math.log(0.6 / 0.4)])
    model = LabelModel(weights=w, accuracies=np.array([0.9, 0.6]), lf_names=("a", "b"))
    checked = 0
    for a_st in range(0, 4):
        for a_sn in range(0, 3):
            b_st, b_sn = 9 - a_st, 1 - a_sn
            c_st, c_sn = 3 - a_st, 2 - a_sn
            if min(b_st, b_sn, c_st, c_sn) < 0:
                continue
            n = a_st + a_sn + b_st + b_sn + c_st + c_sn
            if n > 12:
                continue
            rows, truth = [], []
            for count, votes, label in [
                (a_st, [1, 1], S), (a_sn, [1, 1], N),
                (b_st, [1, ABSTAIN], S), (b_sn, [1, ABSTAIN], N),
                (c_st, [ABSTAIN, 1], S), (c_sn, [ABSTAIN, 1], N),
            ]:
                rows += [votes] * count
                truth += [label] * count
            matrix = LabelMatrix(np.array(rows, dtype=np.int8), ("a", "b"))
            majority_acc = sum(p is t for p, t in zip(majority_vote(matrix), truth))
            weighted_acc = sum(
                p is t for p, t in zip(weighted_vote(matrix, model), truth)
            )
            assert weighted_acc >= majority_acc
            checked += 1
    # Exactly three vote arrangements satisfy the 9/10- and 3/5-accuracy
    # anchor constraints within 12 rows.
    assert checked == 3


# -- criterion: elbow reproduction ---------------------------------------------------

def test_elbow_selects_two_on_two_blobs_across_ten_seeds():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = np.vstack(
            [rng.normal(0.0, 0.8, (150, 2)), rng.normal(8.0, 0.8, (150, 2))]
        )
        report = elbow_select(X, 6, seed=seed)
        assert report.selected_k == 2, f"seed {seed} selected {report.selected_k}"


# -- criterion: determinism -----------------------------------------------------------

def test_cmd_run_byte_identical_reports(tmp_path):
    config = tmp_path / "config.ini"
    config.write_text(
        "[generator]\nn_rows = 3000\n"
        "[training]\nclassifiers = logreg,random_forest\n"
        "[run]\nseed = 123\n"
    )
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(config), "--out", str(out_a)]) == 0
    assert main(["run", "--config", str(config), "--out", str(out_b)]) == 0
    names = sorted(p.name for p in out_a.iterdir())
    assert "metrics.csv" in names and "report.txt" in names
    for name in names:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_generator_bytes_match_frozen_digest():
    """PCG64 streams and the canonical CSV formatting are platform
    independent; the digest pins both."""
    dataset, _, _ = generate(GeneratorConfig(n_rows=2000, seed=123))
    digest = hashlib.sha256(save_transactions(dataset).encode("utf-8")).hexdigest()
    assert digest == "9f4940b78d01e0a67d1d9594c25fbbbc896f5613676e32a53b5899f52b648d5d"
