"""Scoring, OOD aggregation and the similarity / misclassification analyses."""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embeddings import LookupPolicy, lookup
from .errors import EvalError

log = logging.getLogger(__name__)

METRICS = ("macro_f1", "weighted_f1", "accuracy")


@dataclass
class RelationScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    classes: tuple[str, ...]
    per_relation: dict[str, RelationScores]
    macro_f1: float
    weighted_f1: float
    accuracy: float
    confusion: np.ndarray  # rows gold, columns predicted
    folds: int = 1

    def metric(self, name: str) -> float:
        if name not in METRICS:
            raise EvalError(f"unknown metric {name!r}")
        return getattr(self, name)

    def to_dict(self):
        return {
            "classes": list(self.classes),
            "per_relation": {
                r: {"precision": s.precision, "recall": s.recall, "f1": s.f1, "support": s.support}
                for r, s in self.per_relation.items()
            },
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "accuracy": self.accuracy,
            "confusion": self.confusion.astype(int).tolist(),
            "folds": self.folds,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            classes=tuple(d["classes"]),
            per_relation={r: RelationScores(**s) for r, s in d["per_relation"].items()},
            macro_f1=d["macro_f1"],
            weighted_f1=d["weighted_f1"],
            accuracy=d["accuracy"],
            confusion=np.asarray(d["confusion"], dtype=np.int64),
            folds=d.get("folds", 1),
        )


def confusion_matrix(gold_codes, pred_codes, k):
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (np.asarray(gold_codes), np.asarray(pred_codes)), 1)
    return cm


def _prf_from_confusion(cm):
    tp = np.diag(cm).astype(np.float64)
    pred_tot = cm.sum(axis=0).astype(np.float64)
    gold_tot = cm.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, pred_tot, out=np.zeros_like(tp), where=pred_tot > 0)
    recall = np.divide(tp, gold_tot, out=np.zeros_like(tp), where=gold_tot > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    return precision, recall, f1, gold_tot.astype(np.int64)


def f1_from_codes(gold_codes, pred_codes, k, average="weighted_f1") -> float:
    """Fast path used during early stopping; same definitions as ``score``."""
    cm = confusion_matrix(gold_codes, pred_codes, k)
    if average == "accuracy":
        return float(np.trace(cm) / cm.sum())
    _, _, f1, support = _prf_from_confusion(cm)
    if average == "macro_f1":
        return float(f1.mean())
    return float((f1 * support).sum() / support.sum())


def score(gold: Sequence[str], predicted: Sequence[str], classes: Sequence[str] | None = None) -> EvalReport:
    gold, predicted = list(gold), list(predicted)
    if len(gold) != len(predicted):
        raise EvalError(f"{len(gold)} gold labels but {len(predicted)} predictions")
    if not gold:
        raise EvalError("cannot score an empty prediction set")
    if classes is None:
        classes = sorted(set(gold) | set(predicted))
    classes = tuple(classes)
    index = {c: i for i, c in enumerate(classes)}
    try:
        g = [index[x] for x in gold]
        p = [index[x] for x in predicted]
    except KeyError as exc:
        raise EvalError(f"label {exc.args[0]!r} not among classes {classes}") from None
    cm = confusion_matrix(g, p, len(classes))
    precision, recall, f1, support = _prf_from_confusion(cm)
    n = len(gold)
    per = {
        c: RelationScores(float(precision[i]), float(recall[i]), float(f1[i]), int(support[i]))
        for i, c in enumerate(classes)
    }
    return EvalReport(
        classes=classes,
        per_relation=per,
        macro_f1=float(f1.mean()),
        weighted_f1=float((f1 * support).sum() / n),
        accuracy=float(np.trace(cm) / n),
        confusion=cm,
    )


def aggregate_ood(fold_reports: Sequence[EvalReport]) -> EvalReport:
    """Unweighted mean of every scalar over folds; confusion matrices summed."""
    if not fold_reports:
        raise EvalError("need at least one fold report")
    classes = fold_reports[0].classes
    for r in fold_reports[1:]:
        if r.classes != classes:
            raise EvalError("fold reports have different class lists")
    k = len(fold_reports)

    def mean(values):
        return float(sum(values) / k)

    per = {
        c: RelationScores(
            precision=mean(r.per_relation[c].precision for r in fold_reports),
            recall=mean(r.per_relation[c].recall for r in fold_reports),
            f1=mean(r.per_relation[c].f1 for r in fold_reports),
            support=int(sum(r.per_relation[c].support for r in fold_reports)),
        )
        for c in classes
    }
    return EvalReport(
        classes=classes,
        per_relation=per,
        macro_f1=mean(r.macro_f1 for r in fold_reports),
        weighted_f1=mean(r.weighted_f1 for r in fold_reports),
        accuracy=mean(r.accuracy for r in fold_reports),
        confusion=sum((r.confusion for r in fold_reports), np.zeros_like(fold_reports[0].confusion)),
        folds=sum(r.folds for r in fold_reports),
    )


@dataclass
class SimilarityProfile:
    per_relation_mean_cosine: dict[str, float]
    counts: dict[str, int]
    in_vocab_counts: dict[str, int] = field(default_factory=dict)
    skipped: int = 0

    def to_dict(self):
        return {
            "per_relation_mean_cosine": self.per_relation_mean_cosine,
            "counts": self.counts,
            "in_vocab_counts": self.in_vocab_counts,
            "skipped": self.skipped,
        }


def _cos(u, v):
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return None
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def similarity_profile(
    dataset, embeddings, policy: LookupPolicy = LookupPolicy(), exclude_oov: bool = False
) -> SimilarityProfile:
    """Mean cosine between x and y vectors, per relation.

    ``counts`` is the number of pairs averaged; ``in_vocab_counts`` the number
    with both tokens in the embedding vocabulary.
    """
    sums: dict[str, float] = defaultdict(float)
    counts: dict[str, int] = defaultdict(int)
    known: dict[str, int] = defaultdict(int)
    skipped = 0
    for inst in dataset:
        both_known = (policy.normalize(inst.x) in embeddings.index
                      and policy.normalize(inst.y) in embeddings.index)
        if both_known:
            known[inst.relation] += 1
        if exclude_oov and not both_known:
            continue
        c = _cos(lookup(embeddings, inst.x, policy), lookup(embeddings, inst.y, policy))
        if c is None:
            log.warning("zero vector in pair (%s, %s); skipped", inst.x, inst.y)
            skipped += 1
            continue
        sums[inst.relation] += c
        counts[inst.relation] += 1
    rels = sorted(counts)
    return SimilarityProfile(
        {r: sums[r] / counts[r] for r in rels},
        {r: counts[r] for r in rels},
        {r: known.get(r, 0) for r in rels},
        skipped,
    )


@dataclass(frozen=True)
class DiffRow:
    x: str
    relation: str
    y: str
    cosine: float
    label_a: str
    label_b: str


def diff_report(gold, preds_a, preds_b, dataset, embeddings, policy: LookupPolicy = LookupPolicy()):
    """Pairs that model A gets wrong and model B gets right, by ascending cosine."""
    if not (len(gold) == len(preds_a) == len(preds_b) == len(dataset)):
        raise EvalError("gold, predictions and dataset must be aligned")
    rows = []
    for g, a, b, inst in zip(gold, preds_a, preds_b, dataset):
        if a != g and b == g:
            c = _cos(lookup(embeddings, inst.x, policy), lookup(embeddings, inst.y, policy))
            rows.append(DiffRow(inst.x, g, inst.y, float("nan") if c is None else c, a, b))
    rows.sort(key=lambda r: (r.cosine, r.x, r.y))
    return rows


def report_rows(report: EvalReport):
    return [
        {"relation": r, "precision": s.precision, "recall": s.recall, "f1": s.f1, "support": s.support}
        for r, s in report.per_relation.items()
    ]


def report_to_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["relation", "precision", "recall", "f1", "support"],
                       lineterminator="\n")
    w.writeheader()
    for row in report_rows(report):
        w.writerow(row)
    return buf.getvalue()
