"""Load exported text rows, split plans, and per-modality feature CSVs.

Feature CSVs carry one row per record: participant_id, exchange_id, then
exactly the block's declared number of float columns.  Standardization is
z-score with statistics fit on training rows only.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, MissingSplitKeyError

RecordKey = tuple[str, str]

LINGUAL_DIM = 768
AUDIO_DIM = 384
FACIAL_DIM = 18

BLOCK_DIMS = {"audio": AUDIO_DIM, "facial": FACIAL_DIM, "lingual": LINGUAL_DIM}


@dataclass(frozen=True)
class TextRow:
    key: RecordKey
    text: str
    label: int


@dataclass(frozen=True)
class Split:
    test_fold: int
    train: tuple[RecordKey, ...]
    validation: tuple[RecordKey, ...]
    test: tuple[RecordKey, ...]


def load_export(path: str | Path) -> dict[RecordKey, TextRow]:
    """Read the exporter's JSONL; the leading config-echo line is skipped."""
    rows: dict[RecordKey, TextRow] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        if "config" in doc and "text" not in doc:
            continue
        key = (doc["participant_id"], doc["exchange_id"])
        rows[key] = TextRow(key=key, text=doc["text"], label=int(doc["label"]))
    return rows


def load_splits(path: str | Path) -> list[Split]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    splits = []
    for entry in doc["splits"]:
        splits.append(Split(
            test_fold=int(entry["test_fold"]),
            train=tuple((p, e) for p, e in entry["train_records"]),
            validation=tuple((p, e) for p, e in entry["validation_records"]),
            test=tuple((p, e) for p, e in entry["test_records"]),
        ))
    return splits


def load_feature_csv(path: str | Path, expected_dim: int) -> dict[RecordKey, np.ndarray]:
    """Feature vectors by record key; every row must have expected_dim floats."""
    out: dict[RecordKey, np.ndarray] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DimensionMismatchError(f"{path}: empty feature file")
        if len(header) != 2 + expected_dim:
            raise DimensionMismatchError(
                f"{path}: expected {2 + expected_dim} columns, found {len(header)}"
            )
        for row in reader:
            if len(row) != 2 + expected_dim:
                raise DimensionMismatchError(
                    f"{path}: row for {row[:2]} has {len(row) - 2} features,"
                    f" expected {expected_dim}"
                )
            out[(row[0], row[1])] = np.asarray([float(v) for v in row[2:]],
                                               dtype=np.float64)
    return out


def gather(keys: tuple[RecordKey, ...], table: dict, what: str) -> list:
    values = []
    for key in keys:
        if key not in table:
            raise MissingSplitKeyError(f"{what} has no entry for record {key!r}")
        values.append(table[key])
    return values


@dataclass(frozen=True)
class ZScore:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, matrix: np.ndarray) -> "ZScore":
        mean = matrix.mean(axis=0)
        std = matrix.std(axis=0)
        std = np.where(std > 0.0, std, 1.0)  # constant columns pass through
        return cls(mean=mean, std=std)

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.mean) / self.std


def block_matrix(keys: tuple[RecordKey, ...],
                 features: dict[RecordKey, np.ndarray],
                 what: str) -> np.ndarray:
    return np.stack(gather(keys, features, what), axis=0)
