"""Dataset loading, validation, cleaning and label binarization.

The corpus is described by a UTF-8 CSV manifest with header

    participant_id,exchange_id,transcript,audio_path,au_path,self_label,third_label

where asset paths are relative to the manifest's directory.  Waveforms are
RIFF/WAVE, 16-bit signed PCM, mono, sample rate >= 8000 Hz.
"""

from __future__ import annotations

import csv
import enum
import json
import wave
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DuplicateExchangeError,
    LabelOutOfRangeError,
    MissingFieldError,
)
from .facial_text import parse_au_csv

MANIFEST_FIELDS = (
    "participant_id",
    "exchange_id",
    "transcript",
    "audio_path",
    "au_path",
    "self_label",
    "third_label",
)

MIN_SAMPLE_RATE = 8000


class SentimentClass(enum.IntEnum):
    """Binary sentiment; Low sorts before High in reports."""

    LOW = 0
    HIGH = 1

    @property
    def label(self) -> str:
        return "low" if self is SentimentClass.LOW else "high"

    @classmethod
    def from_label(cls, label: str) -> "SentimentClass":
        try:
            return {"low": cls.LOW, "high": cls.HIGH}[label.strip().lower()]
        except KeyError:
            raise DataError(f"unknown sentiment class label {label!r}") from None


def binarize(label_raw: int) -> SentimentClass:
    """Compress a 7-point rating: 1-4 -> Low, 5-7 -> High."""
    if not isinstance(label_raw, int) or isinstance(label_raw, bool):
        raise LabelOutOfRangeError(f"label must be an integer, got {label_raw!r}")
    if not 1 <= label_raw <= 7:
        raise LabelOutOfRangeError(f"label {label_raw} outside 1..7")
    return SentimentClass.LOW if label_raw <= 4 else SentimentClass.HIGH


@dataclass(frozen=True)
class UtteranceRecord:
    participant_id: str
    exchange_id: str
    transcript: str
    audio_path: Path
    au_path: Path
    self_label_raw: int
    third_label_raw: int

    @property
    def key(self) -> tuple[str, str]:
        return (self.participant_id, self.exchange_id)


@dataclass(frozen=True)
class Corpus:
    records: tuple[UtteranceRecord, ...]
    participants: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def from_records(cls, records) -> "Corpus":
        records = tuple(records)
        participants: list[str] = []
        seen = set()
        for rec in records:
            if rec.participant_id not in seen:
                seen.add(rec.participant_id)
                participants.append(rec.participant_id)
        return cls(records=records, participants=tuple(participants))


@dataclass
class CleanReport:
    dropped: list[dict] = field(default_factory=list)

    def add(self, record: UtteranceRecord, reason: str) -> None:
        self.dropped.append(
            {
                "participant_id": record.participant_id,
                "exchange_id": record.exchange_id,
                "reason": reason,
            }
        )

    def write_jsonl(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for entry in self.dropped:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")


def _parse_label(raw: str, row: int, field_name: str) -> int:
    try:
        value = int(raw.strip())
    except ValueError:
        raise LabelOutOfRangeError(
            f"manifest row {row}: {field_name}={raw!r} is not an integer 1..7", row
        ) from None
    if not 1 <= value <= 7:
        raise LabelOutOfRangeError(
            f"manifest row {row}: {field_name}={value} outside 1..7", row
        )
    return value


def load_manifest(path: str | Path) -> Corpus:
    """Read the manifest CSV into a Corpus, preserving row order."""
    path = Path(path)
    base = path.parent
    records: list[UtteranceRecord] = []
    seen_keys: set[tuple[str, str]] = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for field_name in MANIFEST_FIELDS:
            if field_name not in header:
                raise MissingFieldError(0, field_name)
        for row_idx, row in enumerate(reader, start=1):
            for field_name in MANIFEST_FIELDS:
                value = row.get(field_name)
                if value is None or not value.strip():
                    raise MissingFieldError(row_idx, field_name)
            rec = UtteranceRecord(
                participant_id=row["participant_id"].strip(),
                exchange_id=row["exchange_id"].strip(),
                transcript=row["transcript"].strip(),
                audio_path=base / row["audio_path"].strip(),
                au_path=base / row["au_path"].strip(),
                self_label_raw=_parse_label(row["self_label"], row_idx, "self_label"),
                third_label_raw=_parse_label(row["third_label"], row_idx, "third_label"),
            )
            if rec.key in seen_keys:
                raise DuplicateExchangeError(rec.participant_id, rec.exchange_id)
            seen_keys.add(rec.key)
            records.append(rec)
    return Corpus.from_records(records)


def decode_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a PCM16 mono WAV into int16 samples plus its sample rate."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wav:
            if wav.getcomptype() != "NONE":
                raise DataError(f"{path}: compressed WAV not supported")
            if wav.getsampwidth() != 2:
                raise DataError(f"{path}: expected 16-bit samples")
            if wav.getnchannels() != 1:
                raise DataError(f"{path}: expected mono audio")
            rate = wav.getframerate()
            if rate < MIN_SAMPLE_RATE:
                raise DataError(f"{path}: sample rate {rate} below {MIN_SAMPLE_RATE}")
            payload = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError) as exc:
        raise DataError(f"{path}: undecodable WAV ({exc})") from exc
    return np.frombuffer(payload, dtype="<i2"), rate


def _check_assets(record: UtteranceRecord) -> str | None:
    """Reason code for dropping the record, or None when all assets open."""
    if not record.audio_path.is_file():
        return "MissingAudio"
    try:
        samples, _ = decode_wav(record.audio_path)
        if samples.size == 0:
            return "UndecodableAudio"
    except DataError:
        return "UndecodableAudio"
    if not record.au_path.is_file():
        return "MissingAU"
    try:
        parse_au_csv(record.au_path)
    except DataError:
        return "UndecodableAU"
    return None


def clean(corpus: Corpus, workers: int = 1) -> tuple[Corpus, CleanReport]:
    """Drop records whose assets are missing or undecodable.

    Asset checks may run in parallel; results are merged back in manifest
    order, so the output is independent of the worker count.
    """
    if workers > 1 and corpus.records:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reasons = list(pool.map(_check_assets, corpus.records))
    else:
        reasons = [_check_assets(rec) for rec in corpus.records]

    report = CleanReport()
    kept = []
    for record, reason in zip(corpus.records, reasons):
        if reason is None:
            kept.append(record)
        else:
            report.add(record, reason)
    return Corpus.from_records(kept), report
