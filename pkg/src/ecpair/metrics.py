"""Decoding and evaluation: P/R/F1 per task plus cross-task consistency rates."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ScoreMatrices:
    """Per-document scores: clause-level vectors and the (N, N) pair grids."""

    y_e: np.ndarray
    y_c: np.ndarray
    y_p: np.ndarray
    y_tilde: np.ndarray | None = None


@dataclass
class Predictions:
    emotions: set[int] = field(default_factory=set)
    causes: set[int] = field(default_factory=set)
    pairs: set[tuple[int, int]] = field(default_factory=set)


def decode(scores: ScoreMatrices, threshold: float = 0.5) -> Predictions:
    """Keep every element whose score strictly exceeds the threshold."""
    if not 0.0 <= threshold < 1.0:
        raise ValueError(f"threshold must be in [0, 1), got {threshold}")
    ii, jj = np.nonzero(scores.y_p > threshold)
    return Predictions(
        emotions={int(i) for i in np.nonzero(scores.y_e > threshold)[0]},
        causes={int(i) for i in np.nonzero(scores.y_c > threshold)[0]},
        pairs={(int(i), int(j)) for i, j in zip(ii, jj)},
    )


def prf1(predicted: set, gold: set) -> tuple[float, float, float]:
    """Precision, recall, F1; all three are 1 when both sets are empty."""
    if not predicted and not gold:
        return 1.0, 1.0, 1.0
    tp = len(predicted & gold)
    p = tp / len(predicted) if predicted else 0.0
    r = tp / len(gold) if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def consistency_rates(pred: Predictions) -> tuple[float, float]:
    """Fraction of paired clauses that the clause-level heads also predict.

    Measured over distinct clause indices appearing in predicted pairs; both
    rates are 1 when no pairs are predicted.
    """
    pair_emotions = {i for i, _ in pred.pairs}
    pair_causes = {j for _, j in pred.pairs}
    e_rate = len(pair_emotions & pred.emotions) / len(pair_emotions) if pair_emotions else 1.0
    c_rate = len(pair_causes & pred.causes) / len(pair_causes) if pair_causes else 1.0
    return e_rate, c_rate


@dataclass
class TaskMetrics:
    p: float
    r: float
    f1: float

    def to_dict(self):
        return {"p": self.p, "r": self.r, "f1": self.f1}


@dataclass
class MetricsReport:
    ee: TaskMetrics
    ce: TaskMetrics
    ecpe: TaskMetrics
    consistency_e: float
    consistency_c: float

    def to_dict(self):
        return {
            "ee": self.ee.to_dict(),
            "ce": self.ce.to_dict(),
            "ecpe": self.ecpe.to_dict(),
            "consistency_e": self.consistency_e,
            "consistency_c": self.consistency_c,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def format_table(self) -> str:
        rows = [("EE", self.ee), ("CE", self.ce), ("ECPE", self.ecpe)]
        lines = ["task    P       R       F1"]
        lines += [f"{name:<6}{m.p:8.4f}{m.r:8.4f}{m.f1:8.4f}" for name, m in rows]
        lines.append(
            f"consistency  emotion {self.consistency_e:.4f}  cause {self.consistency_c:.4f}"
        )
        return "\n".join(lines)


def _micro(counts) -> TaskMetrics:
    tp, fp, fn = counts
    p = tp / (tp + fp) if tp + fp else (1.0 if fn == 0 else 0.0)
    r = tp / (tp + fn) if tp + fn else (1.0 if fp == 0 else 0.0)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return TaskMetrics(p, r, f1)


def aggregate(pairs_of_predictions, macro: bool = False) -> MetricsReport:
    """Corpus-level report from (predicted, gold) Predictions per document.

    Micro averaging by default: TP/FP/FN summed over documents, then one
    P/R/F1 per task; consistency counted globally over distinct clauses.
    """
    items = list(pairs_of_predictions)
    if macro:
        per_task = {"ee": [], "ce": [], "ecpe": []}
        for pred, gold in items:
            per_task["ee"].append(prf1(pred.emotions, gold.emotions))
            per_task["ce"].append(prf1(pred.causes, gold.causes))
            per_task["ecpe"].append(prf1(pred.pairs, gold.pairs))
        task_metrics = {
            k: TaskMetrics(*(float(np.mean([m[i] for m in v])) for i in range(3)))
            for k, v in per_task.items()
        }
    else:
        counts = {"ee": [0, 0, 0], "ce": [0, 0, 0], "ecpe": [0, 0, 0]}
        for pred, gold in items:
            for key, p_set, g_set in (
                ("ee", pred.emotions, gold.emotions),
                ("ce", pred.causes, gold.causes),
                ("ecpe", pred.pairs, gold.pairs),
            ):
                tp = len(p_set & g_set)
                counts[key][0] += tp
                counts[key][1] += len(p_set) - tp
                counts[key][2] += len(g_set) - tp
        task_metrics = {k: _micro(v) for k, v in counts.items()}

    num_e = num_c = den_e = den_c = 0
    for pred, _ in items:
        pair_e = {i for i, _ in pred.pairs}
        pair_c = {j for _, j in pred.pairs}
        num_e += len(pair_e & pred.emotions)
        den_e += len(pair_e)
        num_c += len(pair_c & pred.causes)
        den_c += len(pair_c)
    return MetricsReport(
        ee=task_metrics["ee"],
        ce=task_metrics["ce"],
        ecpe=task_metrics["ecpe"],
        consistency_e=num_e / den_e if den_e else 1.0,
        consistency_c=num_c / den_c if den_c else 1.0,
    )


def gold_predictions(doc) -> Predictions:
    return Predictions(
        emotions=set(doc.emotion_labels),
        causes=set(doc.cause_labels),
        pairs=set(doc.pair_labels),
    )
