"""Synthetic linearly separable training fixture.

Texts draw their words from two disjoint class vocabularies (disjoint after
hashing, checked at generation time) and feature vectors sit at opposite
ends of one direction per class with mild noise, so every architecture can
reach high test macro-F1 under the pinned hyperparameters.  File formats
mirror the description pipeline's exporter: a config-echo header line in the
JSONL, split plan JSON with an 80/20 train/validation cut in corpus order,
and feature CSVs keyed by participant and exchange id.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import AUDIO_DIM, FACIAL_DIM
from .encoder import tokenize

DEFAULT_PARTICIPANTS = 10
DEFAULT_EXCHANGES = 40
DEFAULT_K = 5

# Sized so the slow-schedule configurations converge inside their epoch
# budget: a small vocabulary keeps the per-class text clusters tight and 40
# exchanges per participant give enough optimizer steps per epoch.
CLASS_VOCAB_SIZE = 16
WORDS_PER_TEXT = 8
FILLER = ("saying",)


def _class_vocabularies() -> tuple[list[str], list[str]]:
    """Two 30-word lists whose hashed token ids never collide."""
    taken = {tokenize(word)[1] for word in FILLER}
    words: list[str] = []
    i = 0
    while len(words) < 2 * CLASS_VOCAB_SIZE:
        word = f"tok{i:04d}"
        i += 1
        bucket = tokenize(word)[1]
        if bucket in taken:
            continue
        taken.add(bucket)
        words.append(word)
    return words[:CLASS_VOCAB_SIZE], words[CLASS_VOCAB_SIZE:]


def _text_for(label: int, rng: np.random.Generator,
              vocabularies: tuple[list[str], list[str]]) -> str:
    pool = vocabularies[label]
    picks = rng.choice(len(pool), size=WORDS_PER_TEXT, replace=False)
    words = list(FILLER) + [pool[i] for i in picks]
    return " ".join(words)


def _feature_row(label: int, rng: np.random.Generator, offsets: np.ndarray,
                 scales: np.ndarray) -> np.ndarray:
    sign = 1.0 if label == 1 else -1.0
    raw = sign + rng.normal(0.0, 0.25, size=offsets.shape[0])
    return offsets + scales * raw


def _write_feature_csv(path: Path, prefix: str, dim: int,
                       rows: list[tuple[str, str, np.ndarray]]) -> None:
    header = ["participant_id", "exchange_id"] + [
        f"{prefix}{i:03d}" for i in range(dim)
    ]
    lines = [",".join(header)]
    for pid, eid, vec in rows:
        lines.append(",".join([pid, eid] + [repr(float(v)) for v in vec]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def gen_fixture(out_dir: str | Path, seed: int = 0,
                participants: int = DEFAULT_PARTICIPANTS,
                exchanges: int = DEFAULT_EXCHANGES,
                k: int = DEFAULT_K) -> dict:
    """Write export.jsonl, splits.json and the two feature CSVs; returns a
    manifest of paths and counts."""
    if participants < k:
        raise ValueError(f"{participants} participants cannot fill {k} folds")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    vocabularies = _class_vocabularies()
    audio_offsets = rng.uniform(-3.0, 3.0, size=AUDIO_DIM)
    audio_scales = rng.uniform(0.5, 2.0, size=AUDIO_DIM)
    facial_offsets = rng.uniform(-3.0, 3.0, size=FACIAL_DIM)
    facial_scales = rng.uniform(0.5, 2.0, size=FACIAL_DIM)

    echo = {
        "fixture": {
            "seed": seed,
            "participants": participants,
            "exchanges_per_participant": exchanges,
            "k": k,
        }
    }

    export_lines = [json.dumps({"config": echo}, sort_keys=True)]
    audio_rows: list[tuple[str, str, np.ndarray]] = []
    facial_rows: list[tuple[str, str, np.ndarray]] = []
    corpus_order: list[tuple[str, str]] = []
    pids = [f"T{i + 1:02d}" for i in range(participants)]
    for pid in pids:
        for i in range(exchanges):
            eid = f"{i:03d}"
            label = i % 2  # alternate so every contiguous slice is balanced
            export_lines.append(json.dumps({
                "participant_id": pid,
                "exchange_id": eid,
                "text": _text_for(label, rng, vocabularies),
                "label": label,
                "label_name": "high" if label == 1 else "low",
                "label_view": "self",
            }, sort_keys=True))
            audio_rows.append((pid, eid,
                               _feature_row(label, rng, audio_offsets,
                                            audio_scales)))
            facial_rows.append((pid, eid,
                                _feature_row(label, rng, facial_offsets,
                                             facial_scales)))
            corpus_order.append((pid, eid))

    export_path = out / "export.jsonl"
    export_path.write_text("\n".join(export_lines) + "\n", encoding="utf-8")
    _write_feature_csv(out / "audio_features.csv", "a", AUDIO_DIM, audio_rows)
    _write_feature_csv(out / "facial_features.csv", "f", FACIAL_DIM, facial_rows)

    assignments = {pid: i % k for i, pid in enumerate(pids)}
    splits = []
    for fold in range(k):
        test = [key for key in corpus_order if assignments[key[0]] == fold]
        rest = [key for key in corpus_order if assignments[key[0]] != fold]
        cut = (4 * len(rest)) // 5
        splits.append({
            "test_fold": fold,
            "train_records": [list(key) for key in rest[:cut]],
            "validation_records": [list(key) for key in rest[cut:]],
            "test_records": [list(key) for key in test],
        })
    splits_doc = {
        "config": echo,
        "fold_plan": {"k": k, "fold_assignments": assignments},
        "splits": splits,
    }
    splits_path = out / "splits.json"
    splits_path.write_text(json.dumps(splits_doc, indent=2, sort_keys=True) + "\n",
                           encoding="utf-8")

    return {
        "export": str(export_path),
        "splits": str(splits_path),
        "audio": str(out / "audio_features.csv"),
        "facial": str(out / "facial_features.csv"),
        "rows": participants * exchanges,
        "k": k,
    }
