"""Synthetic mini-corpus generator with generator-known feature patterns.

Builds 6 participants x 10 utterances: pure-tone WAVs whose segment
frequencies and amplitudes realize each of the five change patterns, AU
CSVs with known appeared sets, and transcripts carrying sentinel words
that a scripted stand-in service maps to fixed answers.  The resulting
prediction outcomes are known per row, so the end-to-end macro-F1 is
hand-computable (0.8 on every fold).
"""

from __future__ import annotations

import csv
import json
import wave
from pathlib import Path

import numpy as np

from .facial_text import SUPPORTED_AU_IDS, au_column

SAMPLE_RATE = 16000
# Long enough that the zero-padded tail frames of the grid shift the last
# period average by well under the 2% hold band.
SEGMENT_SECONDS = 2.0
N_PARTICIPANTS = 6
UTTERANCES_PER_PARTICIPANT = 10
AU_FRAMES = 30

# Segment frequencies and sine amplitudes per pattern letter.  Steps are
# far outside the 2% hold band so frame-boundary mixing cannot flip a
# relation.
PITCH_SEGMENTS = {
    "a": (300.0, 200.0, 120.0),
    "b": (120.0, 200.0, 300.0),
    "c": (300.0, 150.0, 280.0),
    "d": (150.0, 300.0, 160.0),
    "e": (200.0, 200.0, 200.0),
}
ENERGY_SEGMENTS = {
    "a": (0.80, 0.50, 0.30),
    "b": (0.30, 0.50, 0.80),
    "c": (0.80, 0.40, 0.70),
    "d": (0.40, 0.80, 0.45),
    "e": (0.50, 0.50, 0.50),
}
PATTERN_LETTERS = ("a", "b", "c", "d", "e")

# Appeared AU sets cycled over the 10 utterances of each participant.
AU_SETS = (
    frozenset(),
    frozenset({6, 12}),
    frozenset({4}),
    frozenset({1, 2, 25}),
    frozenset({45}),
    frozenset({12}),
    frozenset({6}),
    frozenset({2, 26}),
    frozenset({4, 7, 23}),
    frozenset({1}),
)

# Sentinel -> scripted answer; "unsure" rows force the incorrect-fallback
# path because the answer names no category.
SENTINEL_HIGH = "sunny"
SENTINEL_LOW = "gloomy"
SENTINEL_REFUSE = "unsure"

TRANSCRIPTS = {
    SENTINEL_HIGH: "Today feels really sunny and bright to me",
    SENTINEL_LOW: "It was such a gloomy and heavy afternoon",
    SENTINEL_REFUSE: "I am honestly unsure what to make of it",
}

STANDIN_SCRIPT = {
    "rules": [
        {"contains": SENTINEL_HIGH, "answer": "The description belongs to the high category."},
        {"contains": SENTINEL_LOW, "answer": "The description belongs to the low category."},
        {"contains": SENTINEL_REFUSE, "answer": "I cannot determine the sentiment from this description."},
    ],
    "default_answer": "I cannot determine the sentiment from this description.",
}


def _row_design(u: int) -> tuple[str, int]:
    """(sentinel, raw label) for utterance index u within a participant.

    0-3: gold high answered high; 4-7: gold low answered low; 8: gold high
    refused; 9: gold low refused.  Per participant that is a 4/1/1/4
    confusion split, so precision = recall = 0.8 for both classes.
    """
    if u <= 3:
        return SENTINEL_HIGH, 6
    if u <= 7:
        return SENTINEL_LOW, 2
    if u == 8:
        return SENTINEL_REFUSE, 6
    return SENTINEL_REFUSE, 2


def synthesize_wave(pitch_pattern: str, energy_pattern: str,
                    sr: int = SAMPLE_RATE) -> bytes:
    """PCM16 mono samples: three phase-continuous sine segments."""
    freqs = PITCH_SEGMENTS[pitch_pattern]
    amps = ENERGY_SEGMENTS[energy_pattern]
    seg_len = int(round(SEGMENT_SECONDS * sr))
    pieces = []
    phase = 0.0
    for freq, amp in zip(freqs, amps):
        step = 2.0 * np.pi * freq / sr
        angles = phase + step * np.arange(seg_len)
        pieces.append(amp * np.sin(angles))
        phase = float((angles[-1] + step) % (2.0 * np.pi))
    signal = np.concatenate(pieces)
    return np.rint(signal * 32767.0).astype("<i2").tobytes()


def write_wav(path: Path, samples: bytes, sr: int = SAMPLE_RATE) -> None:
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(sr)
        wav.writeframes(samples)


def write_au_csv(path: Path, appeared: frozenset[int],
                 n_frames: int = AU_FRAMES) -> None:
    """Appeared AUs present in 24/30 frames, the rest in 9/30."""
    columns = ["frame", "timestamp"] + [au_column(au) for au in SUPPORTED_AU_IDS]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([columns[0]] + [" " + c for c in columns[1:]])
        for i in range(n_frames):
            row = [str(i + 1), f"{i * 0.033:.3f}"]
            for au in SUPPORTED_AU_IDS:
                if au in appeared:
                    present = i < 24
                else:
                    present = i < 9
                row.append("1" if present else "0")
            writer.writerow(row)


def generate(out_dir: str | Path) -> Path:
    """Write the corpus under out_dir; returns the manifest path."""
    out_dir = Path(out_dir)
    audio_dir = out_dir / "audio"
    au_dir = out_dir / "au"
    audio_dir.mkdir(parents=True, exist_ok=True)
    au_dir.mkdir(parents=True, exist_ok=True)

    manifest_rows = []
    expected_rows = []
    wave_cache: dict[tuple[str, str], bytes] = {}
    for p in range(N_PARTICIPANTS):
        pid = f"P{p + 1:02d}"
        for u in range(UTTERANCES_PER_PARTICIPANT):
            eid = f"{u + 1:03d}"
            pitch_pattern = PATTERN_LETTERS[(p + u) % 5]
            energy_pattern = PATTERN_LETTERS[(p + 2 * u + 2) % 5]
            appeared = AU_SETS[u]
            sentinel, label = _row_design(u)

            wav_name = f"{pid}_{eid}.wav"
            au_name = f"{pid}_{eid}.csv"
            key = (pitch_pattern, energy_pattern)
            if key not in wave_cache:
                wave_cache[key] = synthesize_wave(*key)
            write_wav(audio_dir / wav_name, wave_cache[key])
            write_au_csv(au_dir / au_name, appeared)

            manifest_rows.append({
                "participant_id": pid,
                "exchange_id": eid,
                "transcript": TRANSCRIPTS[sentinel],
                "audio_path": f"audio/{wav_name}",
                "au_path": f"au/{au_name}",
                "self_label": str(label),
                "third_label": str(label),
            })
            gold = "high" if label >= 5 else "low"
            predicted = gold if sentinel != SENTINEL_REFUSE else (
                "low" if gold == "high" else "high")
            expected_rows.append({
                "participant_id": pid,
                "exchange_id": eid,
                "pitch_pattern": pitch_pattern,
                "energy_pattern": energy_pattern,
                "appeared": sorted(appeared),
                "gold": gold,
                "predicted": predicted,
                "provenance": ("extracted" if sentinel != SENTINEL_REFUSE
                               else "fallback_incorrect"),
            })

    manifest_path = out_dir / "manifest.csv"
    fields = list(manifest_rows[0])
    with manifest_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(manifest_rows)

    (out_dir / "standin_script.json").write_text(
        json.dumps(STANDIN_SCRIPT, indent=2) + "\n", encoding="utf-8")
    with (out_dir / "expected.jsonl").open("w", encoding="utf-8") as fh:
        for row in expected_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return manifest_path
