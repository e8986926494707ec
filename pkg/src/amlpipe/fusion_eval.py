"""Logical-AND fusion of flag sets and the evaluation metric suite.

Fusion operates on hard flags: a transaction is suspicious only when both
the classifier and the anomaly detector flagged it, trading recall for
precision. Metrics are the standard confusion-based four plus rank-based
AUC; zero-denominator cases report 0 with a warning rather than NaN so
degenerate models still produce complete reports.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Sequence

import numpy as np

from .data_model import LabelValue
from .errors import DataError, EmptyEvaluation, LengthMismatch, SingleClassTruth


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsReport:
    model: str
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    seed: int | None = None
    timestamp: str | None = None
    warnings: tuple[str, ...] = ()


def combine_and(
    flags_a: Sequence[LabelValue], flags_b: Sequence[LabelValue]
) -> list[LabelValue]:
    """Suspicious iff both inputs are Suspicious."""
    if len(flags_a) != len(flags_b):
        raise LengthMismatch(f"flag lists differ: {len(flags_a)} vs {len(flags_b)}")
    return [
        LabelValue.SUSPICIOUS
        if a is LabelValue.SUSPICIOUS and b is LabelValue.SUSPICIOUS
        else LabelValue.NORMAL
        for a, b in zip(flags_a, flags_b)
    ]


def confusion(pred: Sequence[LabelValue], truth: Sequence[LabelValue]) -> ConfusionMatrix:
    if len(pred) != len(truth):
        raise LengthMismatch(f"pred has {len(pred)} rows, truth has {len(truth)}")
    tp = tn = fp = fn = 0
    for p, t in zip(pred, truth):
        if t is LabelValue.UNLABELED:
            raise DataError("truth labels must be Suspicious or Normal")
        positive = p is LabelValue.SUSPICIOUS
        if t is LabelValue.SUSPICIOUS:
            tp += positive
            fn += not positive
        else:
            fp += positive
            tn += not positive
    return ConfusionMatrix(tp=int(tp), tn=int(tn), fp=int(fp), fn=int(fn))


def metrics(
    cm: ConfusionMatrix,
    model: str = "",
    auc_value: float | None = None,
    seed: int | None = None,
) -> MetricsReport:
    """Accuracy, precision, recall, and F1 from confusion counts."""
    total = cm.total
    if total == 0:
        raise EmptyEvaluation("metrics need at least one evaluated row")
    warnings: list[str] = []

    accuracy = (cm.tp + cm.tn) / total
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        warnings.append("precision undefined (no predicted positives); reported 0")
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        warnings.append("recall undefined (no actual positives); reported 0")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        warnings.append("f1 undefined (precision + recall = 0); reported 0")

    return MetricsReport(
        model=model,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        auc=auc_value,
        tp=cm.tp,
        fp=cm.fp,
        tn=cm.tn,
        fn=cm.fn,
        seed=seed,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        warnings=tuple(warnings),
    )


def f1_from_pr(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def auc(scores: Sequence[float], truth: Sequence[LabelValue]) -> float:
    """Probability that a random positive outscores a random negative, ties
    counted half (rank-based; equivalent to the ROC trapezoid)."""
    if len(scores) != len(truth):
        raise LengthMismatch(f"scores has {len(scores)} rows, truth has {len(truth)}")
    y = np.array([int(t) for t in truth])
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassTruth("AUC needs both classes in the truth labels")

    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    starts = ends - counts + 1
    average_rank = (starts + ends) / 2.0
    ranks = average_rank[inverse]
    rank_sum_pos = ranks[y == 1].sum()
    return float((rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


_CSV_HEADER = "model,accuracy,precision,recall,f1,auc,tp,fp,tn,fn,seed"


def reports_to_csv(reports: Sequence[MetricsReport]) -> str:
    """One CSV row per evaluated model (timestamps excluded so reports from
    identical configs are byte-identical)."""
    buffer = io.StringIO()
    buffer.write(_CSV_HEADER + "\n")
    for r in reports:
        auc_text = "" if r.auc is None else f"{r.auc:.6f}"
        seed_text = "" if r.seed is None else str(r.seed)
        buffer.write(
            f"{r.model},{r.accuracy:.6f},{r.precision:.6f},{r.recall:.6f},"
            f"{r.f1:.6f},{auc_text},{r.tp},{r.fp},{r.tn},{r.fn},{seed_text}\n"
        )
    return buffer.getvalue()


def reports_to_table(reports: Sequence[MetricsReport]) -> str:
    """Aligned plain-text metrics table."""
    headers = ["model", "accuracy", "precision", "recall", "f1", "auc", "tp", "fp", "tn", "fn"]
    rows = [
        [
            r.model,
            f"{r.accuracy:.4f}",
            f"{r.precision:.4f}",
            f"{r.recall:.4f}",
            f"{r.f1:.4f}",
            "-" if r.auc is None else f"{r.auc:.4f}",
            str(r.tp),
            str(r.fp),
            str(r.tn),
            str(r.fn),
        ]
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"
