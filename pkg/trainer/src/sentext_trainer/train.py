"""Training loops, pinned hyperparameters, and the config x fold x run matrix.

Fine-tuning updates encoder and head; freeze mode caches the pooled vectors
once and trains only the head on them.  Checkpoint selection is by validation
macro-F1 and the reported score is the selected checkpoint's test macro-F1.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .data import RecordKey, Split, TextRow, ZScore, block_matrix, gather
from .encoder import (
    BUILTIN_ENCODER,
    EncoderConfig,
    Pooling,
    TrainingMode,
    batch_tokens,
    load_encoder,
    pool,
)
from .errors import DimensionMismatchError, IncompleteMatrixError
from .models import BaselineConfig, DiscriminativeModel, build_baseline, check_block_shapes

EVAL_BATCH = 256

# Feature blocks whose scale is arbitrary; the lingual vectors come out of a
# layer-normed encoder and pass through unscaled.
Z_SCORED_BLOCKS = ("audio", "facial")


@dataclass(frozen=True)
class Hyperparams:
    max_epochs: int
    batch_size: int
    learning_rate: float
    late_learning_rate: float | None = None  # applied from switch_epoch on
    switch_epoch: int | None = None  # 1-based epoch index
    min_epochs_before_stop: int = 0  # patience is ignored through this epoch
    patience: int = 5

    def echo(self) -> dict:
        doc = {
            "max_epochs": self.max_epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "patience": self.patience,
            "optimizer": "adam",
            "loss": "cross_entropy",
        }
        if self.late_learning_rate is not None:
            doc["late_learning_rate"] = self.late_learning_rate
            doc["switch_epoch"] = self.switch_epoch
        return doc


FINE_TUNE_HP = Hyperparams(max_epochs=40, batch_size=16, learning_rate=2e-5)
FROZEN_HP = Hyperparams(max_epochs=200, batch_size=32, learning_rate=1e-3,
                        late_learning_rate=5e-4, switch_epoch=51,
                        min_epochs_before_stop=50)


def default_hyperparams(mode: TrainingMode | None = None) -> Hyperparams:
    """Fine-tuning gets the small-rate schedule; frozen heads and baselines
    share the warm-up schedule."""
    if mode is TrainingMode.FINETUNE:
        return FINE_TUNE_HP
    return FROZEN_HP


def macro_f1(preds: np.ndarray, golds: np.ndarray) -> float:
    """Unweighted mean of the two per-class F1 scores; absent class scores 0."""
    scores = []
    for cls in (0, 1):
        tp = int(np.sum((preds == cls) & (golds == cls)))
        fp = int(np.sum((preds == cls) & (golds != cls)))
        fn = int(np.sum((preds != cls) & (golds == cls)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * precision * recall / (precision + recall)
                      if precision + recall else 0.0)
    return sum(scores) / len(scores)


@dataclass(eq=False)
class TrainResult:
    config_tag: str
    model: nn.Module
    test_f1: float
    validation_f1: float
    train_f1: float
    best_epoch: int
    epochs_run: int
    hyperparams: dict


def _predict(model: nn.Module, logits_fn, inputs, n: int) -> np.ndarray:
    model.eval()
    preds = []
    with torch.no_grad():
        for start in range(0, n, EVAL_BATCH):
            idx = torch.arange(start, min(start + EVAL_BATCH, n))
            preds.append(logits_fn(model, inputs, idx).argmax(dim=1).numpy())
    return np.concatenate(preds)


def _score(model: nn.Module, logits_fn, portion) -> float:
    inputs, labels = portion
    preds = _predict(model, logits_fn, inputs, len(labels))
    return macro_f1(preds, labels.numpy())


def _fit(model: nn.Module, logits_fn, train, val, hp: Hyperparams, seed: int) -> dict:
    """Adam + cross-entropy over shuffled minibatches; restores the epoch with
    the best validation macro-F1 (earliest on ties)."""
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=hp.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    train_inputs, train_labels = train
    n = len(train_labels)
    best_f1, best_epoch = -1.0, 0
    best_state: dict = {}
    since_best = 0
    epochs_run = 0
    for epoch in range(1, hp.max_epochs + 1):
        epochs_run = epoch
        if hp.switch_epoch is not None and epoch >= hp.switch_epoch:
            for group in optimizer.param_groups:
                group["lr"] = hp.late_learning_rate
        model.train()
        order = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            idx = torch.from_numpy(order[start:start + hp.batch_size].copy())
            optimizer.zero_grad()
            loss = loss_fn(logits_fn(model, train_inputs, idx), train_labels[idx])
            loss.backward()
            optimizer.step()
        score = _score(model, logits_fn, val)
        if score > best_f1:
            best_f1, best_epoch = score, epoch
            best_state = copy.deepcopy(model.state_dict())
            since_best = 0
        else:
            since_best += 1
        if epoch > hp.min_epochs_before_stop and since_best >= hp.patience:
            break
    model.load_state_dict(best_state)
    return {"best_epoch": best_epoch, "epochs_run": epochs_run,
            "validation_f1": best_f1}


def _labels(keys: tuple[RecordKey, ...],
            rows: dict[RecordKey, TextRow]) -> torch.Tensor:
    return torch.tensor([r.label for r in gather(keys, rows, "export")],
                        dtype=torch.long)


def _texts(keys: tuple[RecordKey, ...],
           rows: dict[RecordKey, TextRow]) -> list[str]:
    return [r.text for r in gather(keys, rows, "export")]


def _pooled_matrix(model: DiscriminativeModel, texts: list[str]) -> torch.Tensor:
    """Pooled vectors with the encoder held in eval mode, no gradients."""
    model.encoder.eval()
    out = []
    with torch.no_grad():
        for start in range(0, len(texts), EVAL_BATCH):
            ids, mask = batch_tokens(texts[start:start + EVAL_BATCH])
            out.append(model.pooled(ids, mask))
    return torch.cat(out, dim=0)


def train_discriminative(rows: dict[RecordKey, TextRow], split: Split,
                         cfg: EncoderConfig, hp: Hyperparams | None = None,
                         seed: int = 0) -> TrainResult:
    hp = hp or default_hyperparams(cfg.training_mode)
    torch.manual_seed(seed)
    model = DiscriminativeModel(cfg)
    portions = {
        name: (_texts(keys, rows), _labels(keys, rows))
        for name, keys in (("train", split.train),
                           ("validation", split.validation),
                           ("test", split.test))
    }
    if cfg.training_mode is TrainingMode.FREEZE:
        # Encoder weights never enter the optimizer, so the pooled vectors are
        # computed once and the head trains on the cache.
        cached = {name: (_pooled_matrix(model, texts), labels)
                  for name, (texts, labels) in portions.items()}
        trained: nn.Module = model.head

        def logits_fn(module, inputs, idx):
            return module(inputs[idx])
    else:
        cached = {name: (batch_tokens(texts), labels)
                  for name, (texts, labels) in portions.items()}
        trained = model

        def logits_fn(module, inputs, idx):
            ids, mask = inputs
            return module(ids[idx], mask[idx])

    history = _fit(trained, logits_fn, cached["train"], cached["validation"],
                   hp, seed)
    return TrainResult(
        config_tag=cfg.tag,
        model=model,
        test_f1=_score(trained, logits_fn, cached["test"]),
        validation_f1=history["validation_f1"],
        train_f1=_score(trained, logits_fn, cached["train"]),
        best_epoch=history["best_epoch"],
        epochs_run=history["epochs_run"],
        hyperparams=hp.echo(),
    )


def lingual_features(rows: dict[RecordKey, TextRow],
                     encoder_name: str = BUILTIN_ENCODER,
                     ) -> dict[RecordKey, np.ndarray]:
    """Frozen-encoder mean-pooled vectors, the baselines' lingual block."""
    encoder = load_encoder(encoder_name)
    encoder.eval()
    keys = list(rows)
    out: dict[RecordKey, np.ndarray] = {}
    with torch.no_grad():
        for start in range(0, len(keys), EVAL_BATCH):
            chunk = keys[start:start + EVAL_BATCH]
            ids, mask = batch_tokens([rows[k].text for k in chunk])
            pooled = pool(encoder(ids, mask), mask, Pooling.MEAN)
            for key, vec in zip(chunk, pooled):
                out[key] = vec.numpy().astype(np.float64)
    return out


def fit_scalers(cfg: BaselineConfig,
                features: dict[str, dict[RecordKey, np.ndarray]],
                train_keys: tuple[RecordKey, ...]) -> dict[str, ZScore]:
    """Standardization statistics from the training rows alone."""
    return {
        name: ZScore.fit(block_matrix(train_keys, features[name], name))
        for name in cfg.blocks if name in Z_SCORED_BLOCKS
    }


def train_baseline(rows: dict[RecordKey, TextRow],
                   features: dict[str, dict[RecordKey, np.ndarray]],
                   split: Split, cfg: BaselineConfig,
                   hp: Hyperparams | None = None, seed: int = 0) -> TrainResult:
    hp = hp or default_hyperparams()
    missing = [b for b in cfg.blocks if b not in features]
    if missing:
        raise DimensionMismatchError(f"feature blocks not loaded: {missing}")
    scalers = fit_scalers(cfg, features, split.train)

    def blocks_for(keys: tuple[RecordKey, ...]) -> list[torch.Tensor]:
        blocks = []
        for name in cfg.blocks:
            matrix = block_matrix(keys, features[name], name)
            if name in scalers:
                matrix = scalers[name].apply(matrix)
            blocks.append(torch.from_numpy(matrix).float())
        return blocks

    portions = {
        name: (blocks_for(keys), _labels(keys, rows))
        for name, keys in (("train", split.train),
                           ("validation", split.validation),
                           ("test", split.test))
    }
    check_block_shapes(cfg, portions["train"][0])
    torch.manual_seed(seed)
    model = build_baseline(cfg)

    def logits_fn(module, inputs, idx):
        return module([block[idx] for block in inputs])

    history = _fit(model, logits_fn, portions["train"], portions["validation"],
                   hp, seed)
    return TrainResult(
        config_tag=cfg.tag,
        model=model,
        test_f1=_score(model, logits_fn, portions["test"]),
        validation_f1=history["validation_f1"],
        train_f1=_score(model, logits_fn, portions["train"]),
        best_epoch=history["best_epoch"],
        epochs_run=history["epochs_run"],
        hyperparams=hp.echo(),
    )


def run_job(config, rows: dict[RecordKey, TextRow],
            features: dict[str, dict[RecordKey, np.ndarray]] | None,
            split: Split, seed: int) -> TrainResult:
    if isinstance(config, EncoderConfig):
        return train_discriminative(rows, split, config, seed=seed)
    return train_baseline(rows, features or {}, split, config, seed=seed)


def aggregate_scores(run_fold_scores: list[list[float]]) -> dict:
    """Mean over folds per run, then mean over runs; same shape as the
    evaluation report emitted by the description pipeline."""
    if not run_fold_scores or not run_fold_scores[0]:
        raise IncompleteMatrixError("empty score matrix")
    k = len(run_fold_scores[0])
    for row in run_fold_scores:
        if len(row) != k:
            raise IncompleteMatrixError(
                f"expected {k} folds per run, got {len(row)}"
            )
        for cell in row:
            if cell is None or not isinstance(cell, (int, float)) or math.isnan(cell):
                raise IncompleteMatrixError(f"bad score cell {cell!r}")
    per_run = [sum(row) / k for row in run_fold_scores]
    per_fold = [sum(row[f] for row in run_fold_scores) / len(run_fold_scores)
                for f in range(k)]
    return {
        "run_fold_scores": [[float(c) for c in row] for row in run_fold_scores],
        "per_fold_f1": per_fold,
        "per_run_mean": per_run,
        "final_f1": sum(per_run) / len(per_run),
    }


def run_matrix(configs, rows: dict[RecordKey, TextRow],
               features: dict[str, dict[RecordKey, np.ndarray]] | None,
               splits: list[Split], runs: int = 3, base_seed: int = 0,
               ) -> tuple[dict[str, dict], list[tuple[int, int, str, float]]]:
    """Train every config on every fold, `runs` times with distinct seeds.

    Returns per-config aggregate reports plus flat (run, fold, config, f1)
    rows in execution order.
    """
    reports: dict[str, dict] = {}
    csv_rows: list[tuple[int, int, str, float]] = []
    for config in configs:
        matrix = []
        for run in range(runs):
            fold_row = []
            for split in splits:
                seed = base_seed + run * 1009 + split.test_fold
                result = run_job(config, rows, features, split, seed)
                fold_row.append(result.test_f1)
                csv_rows.append((run, split.test_fold, config.tag,
                                 result.test_f1))
            matrix.append(fold_row)
        reports[config.tag] = aggregate_scores(matrix)
    return reports, csv_rows
