"""Decision rules and metrics: top-q thresholding, confusion-matrix
metrics, and tie-aware AUROC."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .data import ANOMALY, NORMAL
from .errors import ShapeError, UndefinedAurocError


def _as_scores(scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("scores must be a nonempty 1-D array")
    if not np.isfinite(s).all():
        raise ValueError("scores must be finite")
    return s


def _as_labels(labels, n: int, name: str) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.shape != (n,):
        raise ShapeError(f"{name} length {lab.shape} does not match {n} samples")
    if lab.size and not np.isin(lab, (NORMAL, ANOMALY)).all():
        raise ValueError(f"{name} must contain only 0/1 entries")
    return lab.astype(np.int8)


def threshold_top_q(scores, q: float) -> np.ndarray:
    """Flag exactly ceil(q*n) highest-scoring samples as anomalies.

    Ties at the cut go to the earlier index.
    """
    s = _as_scores(scores)
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    n = s.size
    k = math.ceil(q * n)
    order = np.argsort(-s, kind="stable")
    pred = np.full(n, NORMAL, dtype=np.int8)
    pred[order[:k]] = ANOMALY
    return pred


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    auroc: float | None = None
    threshold_used: float | None = None

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "auroc": self.auroc,
            "threshold_used": self.threshold_used,
            "counts": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        counts = d["counts"]
        return cls(
            precision=float(d["precision"]), recall=float(d["recall"]),
            f1=float(d["f1"]), accuracy=float(d["accuracy"]),
            tp=int(counts["tp"]), fp=int(counts["fp"]),
            tn=int(counts["tn"]), fn=int(counts["fn"]),
            auroc=None if d.get("auroc") is None else float(d["auroc"]),
            threshold_used=(None if d.get("threshold_used") is None
                            else float(d["threshold_used"])),
        )


def confusion_metrics(pred, truth) -> EvalReport:
    """Precision/recall/F1/accuracy with the 0-denominator -> 0 convention."""
    pred = np.asarray(pred)
    if pred.ndim != 1 or pred.size == 0:
        raise ShapeError("pred must be a nonempty 1-D array")
    pred = _as_labels(pred, pred.shape[0], "pred")
    truth = _as_labels(truth, pred.shape[0], "truth")

    tp = int(np.sum((pred == ANOMALY) & (truth == ANOMALY)))
    fp = int(np.sum((pred == ANOMALY) & (truth == NORMAL)))
    tn = int(np.sum((pred == NORMAL) & (truth == NORMAL)))
    fn = int(np.sum((pred == NORMAL) & (truth == ANOMALY)))
    n = tp + fp + tn + fn

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    accuracy = (tp + tn) / n if n else 0.0
    return EvalReport(precision=precision, recall=recall, f1=f1,
                      accuracy=accuracy, tp=tp, fp=fp, tn=tn, fn=fn)


def auroc(scores, truth) -> float:
    """Probability a random anomaly outscores a random normal, with half
    credit for ties (average-rank Mann-Whitney form)."""
    s = _as_scores(scores)
    truth = _as_labels(truth, s.size, "truth")
    n_pos = int(np.sum(truth == ANOMALY))
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAurocError(
            "AUROC needs at least one sample of each class")
    ranks = rankdata(s, method="average")
    pos_rank_sum = float(ranks[truth == ANOMALY].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def evaluate(scores, truth, q: float = 0.2) -> EvalReport:
    """Full report: top-q decisions for the confusion metrics, threshold-free
    AUROC. Single-class truth leaves auroc unset instead of failing."""
    s = _as_scores(scores)
    pred = threshold_top_q(s, q)
    report = confusion_metrics(pred, truth)
    k = math.ceil(q * s.size)
    report.threshold_used = float(np.sort(s)[::-1][k - 1])
    try:
        report.auroc = auroc(s, truth)
    except UndefinedAurocError:
        report.auroc = None
    return report


REPORT_FIELDS = ["precision", "recall", "f1", "accuracy", "auroc",
                 "threshold_used", "tp", "fp", "tn", "fn"]


def save_report_json(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n",
                          encoding="utf-8")


def load_report_json(path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_report_csv(report: EvalReport, path) -> None:
    """One-row CSV for table assembly; undefined auroc becomes an empty
    field."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_FIELDS)
        row = []
        for field in REPORT_FIELDS:
            value = getattr(report, field)
            row.append("" if value is None else repr(value) if isinstance(value, float) else value)
        writer.writerow(row)
