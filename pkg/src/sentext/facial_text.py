"""Facial action unit (AU) frame data: parsing, appearance rule, phrases.

The AU export is a CSV with one row per video frame and one ``AU.._c`` column
per supported AU holding binary presence (0.0 / 1.0).  An AU counts as
appeared when it is present in strictly more than half of the frames.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyFileError, MissingColumnError, NonBinaryValueError
from .locales import LocaleTable

SUPPORTED_AU_IDS = (1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17, 20, 23, 25, 26, 28, 45)

NO_AU_KEY = "au.none"


def au_column(au_id: int) -> str:
    return f"AU{au_id:02d}_c"


@dataclass(frozen=True)
class AUFrameMatrix:
    """Binary presence per (AU, frame); column order fixed to SUPPORTED_AU_IDS."""

    presence: np.ndarray  # shape (n_aus, n_frames), values 0/1
    n_frames: int

    @property
    def au_ids(self) -> tuple[int, ...]:
        return SUPPORTED_AU_IDS

    def presence_count(self, au_id: int) -> int:
        return int(self.presence[SUPPORTED_AU_IDS.index(au_id)].sum())


def parse_au_csv(path: str | Path) -> AUFrameMatrix:
    """Parse an AU frame CSV.

    Header names may carry leading spaces (as the common facial toolkit
    emits); extra columns are ignored.  Cell values must parse to 0 or 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, skipinitialspace=True)
        if reader.fieldnames is None:
            raise EmptyFileError(f"{path}: no header row")
        header = {name.strip(): name for name in reader.fieldnames}
        for au_id in SUPPORTED_AU_IDS:
            if au_column(au_id) not in header:
                raise MissingColumnError(au_id, str(path))
        rows = []
        for row_idx, row in enumerate(reader):
            frame = np.empty(len(SUPPORTED_AU_IDS), dtype=np.int8)
            for j, au_id in enumerate(SUPPORTED_AU_IDS):
                raw = (row[header[au_column(au_id)]] or "").strip()
                try:
                    value = float(raw)
                except ValueError:
                    raise NonBinaryValueError(row_idx, au_id, raw) from None
                if value not in (0.0, 1.0):
                    raise NonBinaryValueError(row_idx, au_id, raw)
                frame[j] = int(value)
            rows.append(frame)
    if not rows:
        raise EmptyFileError(f"{path}: header but no frames")
    presence = np.stack(rows, axis=1)
    return AUFrameMatrix(presence=presence, n_frames=len(rows))


def appeared(matrix: AUFrameMatrix) -> frozenset[int]:
    """AU ids present in strictly more than half of the frames."""
    counts = matrix.presence.sum(axis=1)
    return frozenset(
        au_id
        for au_id, count in zip(SUPPORTED_AU_IDS, counts)
        if 2 * int(count) > matrix.n_frames
    )


def describe_facial(appeared_ids: frozenset[int] | set[int],
                    locale: LocaleTable) -> list[str]:
    """Phrases for the appeared AUs in ascending id order.

    An empty set yields the single no-expression phrase.
    """
    if not appeared_ids:
        return [locale.get(NO_AU_KEY)]
    unknown = set(appeared_ids) - set(SUPPORTED_AU_IDS)
    if unknown:
        raise ValueError(f"unsupported AU ids: {sorted(unknown)}")
    return [locale.get(f"au.{au_id}") for au_id in sorted(appeared_ids)]
