"""Participant-independent cross-validation splits and macro-F1 scoring."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .corpus import Corpus, SentimentClass
from .errors import (
    BadFoldIndexError,
    DataError,
    EmptyInputError,
    IncompleteMatrixError,
    LengthMismatchError,
    TooFewParticipantsError,
)

DEFAULT_K = 5
DEFAULT_RUNS = 3

RecordKey = tuple[str, str]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    fold_assignments: dict[str, int]  # participant_id -> fold index

    def participants_in(self, fold: int) -> list[str]:
        return [p for p, f in self.fold_assignments.items() if f == fold]

    def to_json_dict(self) -> dict:
        return {"k": self.k, "fold_assignments": dict(self.fold_assignments)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "FoldPlan":
        return cls(k=int(d["k"]),
                   fold_assignments={str(p): int(f)
                                     for p, f in d["fold_assignments"].items()})


@dataclass(frozen=True)
class SplitSpec:
    test_fold: int
    train_records: tuple[RecordKey, ...]
    validation_records: tuple[RecordKey, ...]
    test_records: tuple[RecordKey, ...]


@dataclass(frozen=True)
class MetricsReport:
    run_fold_scores: tuple[tuple[float, ...], ...]  # runs x k
    per_fold_f1: tuple[float, ...]  # mean over runs, one per fold
    per_run_mean: tuple[float, ...]
    final_f1: float

    def to_json_dict(self) -> dict:
        return {
            "run_fold_scores": [list(row) for row in self.run_fold_scores],
            "per_fold_f1": list(self.per_fold_f1),
            "per_run_mean": list(self.per_run_mean),
            "final_f1": self.final_f1,
        }

    def csv_rows(self) -> list[tuple[int, int, float]]:
        return [(r, f, score)
                for r, row in enumerate(self.run_fold_scores)
                for f, score in enumerate(row)]


def make_folds(corpus: Corpus, k: int = DEFAULT_K, seed: int = 0) -> FoldPlan:
    """Shuffle participants by seed, deal them round-robin into k folds."""
    participants = list(corpus.participants)
    if len(participants) < k:
        raise TooFewParticipantsError(
            f"{len(participants)} participants cannot fill {k} folds"
        )
    random.Random(seed).shuffle(participants)
    assignments = {p: i % k for i, p in enumerate(participants)}
    return FoldPlan(k=k, fold_assignments=assignments)


def make_split(corpus: Corpus, plan: FoldPlan, test_fold: int) -> SplitSpec:
    """Hold out one fold; cut the rest 80/20 in corpus order."""
    if not 0 <= test_fold < plan.k:
        raise BadFoldIndexError(f"fold {test_fold} outside [0, {plan.k})")
    test: list[RecordKey] = []
    rest: list[RecordKey] = []
    for rec in corpus.records:
        try:
            fold = plan.fold_assignments[rec.participant_id]
        except KeyError:
            raise DataError(
                f"participant {rec.participant_id!r} missing from fold plan"
            ) from None
        (test if fold == test_fold else rest).append(rec.key)
    cut = (4 * len(rest)) // 5  # exact floor(0.8 * m)
    return SplitSpec(
        test_fold=test_fold,
        train_records=tuple(rest[:cut]),
        validation_records=tuple(rest[cut:]),
        test_records=tuple(test),
    )


def macro_f1(preds: list[SentimentClass], golds: list[SentimentClass]) -> float:
    """Unweighted mean of per-class F1; a class absent from both sides scores 0."""
    if len(preds) != len(golds):
        raise LengthMismatchError(f"{len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise EmptyInputError("no predictions to score")
    scores = []
    for cls in (SentimentClass.LOW, SentimentClass.HIGH):
        tp = sum(1 for p, g in zip(preds, golds) if p is cls and g is cls)
        fp = sum(1 for p, g in zip(preds, golds) if p is cls and g is not cls)
        fn = sum(1 for p, g in zip(preds, golds) if p is not cls and g is cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        scores.append(f1)
    return sum(scores) / len(scores)


def fold_scores(corpus: Corpus, plan: FoldPlan,
                predictions: dict[RecordKey, SentimentClass],
                golds: dict[RecordKey, SentimentClass]) -> list[float]:
    """Macro-F1 on each fold's test records, in fold order."""
    out = []
    for fold in range(plan.k):
        split = make_split(corpus, plan, fold)
        fold_preds, fold_golds = [], []
        for key in split.test_records:
            if key not in predictions or key not in golds:
                raise DataError(f"no prediction for record {key!r}")
            fold_preds.append(predictions[key])
            fold_golds.append(golds[key])
        out.append(macro_f1(fold_preds, fold_golds))
    return out


def aggregate(run_fold_scores: list[list[float]]) -> MetricsReport:
    """Mean over folds per run, then mean over runs."""
    if not run_fold_scores or not run_fold_scores[0]:
        raise IncompleteMatrixError("empty score matrix")
    k = len(run_fold_scores[0])
    for row in run_fold_scores:
        if len(row) != k:
            raise IncompleteMatrixError(f"expected {k} folds per run, got {len(row)}")
        for cell in row:
            if cell is None or not isinstance(cell, (int, float)) or math.isnan(cell):
                raise IncompleteMatrixError(f"bad score cell {cell!r}")
    per_run = tuple(sum(row) / k for row in run_fold_scores)
    per_fold = tuple(sum(row[f] for row in run_fold_scores) / len(run_fold_scores)
                     for f in range(k))
    return MetricsReport(
        run_fold_scores=tuple(tuple(float(c) for c in row) for row in run_fold_scores),
        per_fold_f1=per_fold,
        per_run_mean=per_run,
        final_f1=sum(per_run) / len(per_run),
    )
