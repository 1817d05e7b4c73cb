"""Frame-level pitch and RMS energy, reduced to three period averages.

The waveform is analyzed on a fixed frame grid (same grid for pitch and
energy, so the two tracks always align).  Pitch uses normalized
cross-correlation with parabolic peak interpolation; a frame is voiced when
the best correlation in the lag range reaches the clarity threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadPitchRangeError, EmptySeriesError, EmptyWaveformError

DEFAULT_FRAME_LEN_S = 0.052
DEFAULT_HOP_S = 0.01
DEFAULT_FLOOR_HZ = 50.0
DEFAULT_CEIL_HZ = 400.0
CLARITY_THRESHOLD = 0.30

# A shorter-lag peak this close to the best one wins, which keeps the
# fundamental when a period multiple also falls inside the lag range.
PEAK_KEEP_RATIO = 0.90

PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class FrameTrack:
    """Aligned per-frame pitch (NaN where unvoiced) and RMS energy."""

    frame_len_s: float
    hop_s: float
    pitch_hz: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        if self.pitch_hz.shape != self.energy.shape:
            raise ValueError("pitch and energy tracks must have equal length")

    @property
    def n_frames(self) -> int:
        return int(self.energy.shape[0])


@dataclass(frozen=True)
class PeriodAverages:
    """Mean over each duration third; None where no value was present."""

    p1: float | None
    p2: float | None
    p3: float | None
    n_used: tuple[int, int, int]

    @property
    def defined(self) -> bool:
        return None not in (self.p1, self.p2, self.p3)

    def values(self) -> tuple[float | None, float | None, float | None]:
        return (self.p1, self.p2, self.p3)


def normalize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Map 16-bit integer samples into [-1, 1)."""
    return np.asarray(samples, dtype=np.float64) / PCM16_SCALE


def _frame_params(sample_rate: float, frame_len_s: float, hop_s: float) -> tuple[int, int]:
    if frame_len_s <= 0:
        raise ValueError("frame_len_s must be > 0")
    if not 0 < hop_s <= frame_len_s:
        raise ValueError("hop_s must satisfy 0 < hop_s <= frame_len_s")
    frame_len = max(1, int(round(frame_len_s * sample_rate)))
    hop = max(1, int(round(hop_s * sample_rate)))
    return frame_len, hop


def compute_energy(waveform: np.ndarray, sample_rate: float,
                   frame_len_s: float = DEFAULT_FRAME_LEN_S,
                   hop_s: float = DEFAULT_HOP_S) -> np.ndarray:
    """RMS per frame on normalized samples; trailing partials are zero-padded."""
    waveform = np.asarray(waveform, dtype=np.float64)
    if waveform.size == 0:
        raise EmptyWaveformError("cannot compute energy of an empty waveform")
    frame_len, hop = _frame_params(sample_rate, frame_len_s, hop_s)
    frames = _kernels.frame_signal(waveform, frame_len, hop)
    return _kernels.rms_energy_frames(frames)


def compute_pitch(waveform: np.ndarray, sample_rate: float,
                  frame_len_s: float = DEFAULT_FRAME_LEN_S,
                  hop_s: float = DEFAULT_HOP_S,
                  floor_hz: float = DEFAULT_FLOOR_HZ,
                  ceil_hz: float = DEFAULT_CEIL_HZ,
                  clarity: float = CLARITY_THRESHOLD) -> np.ndarray:
    """Fundamental frequency per frame, NaN where the frame is unvoiced.

    Voiced estimates always lie in [floor_hz, ceil_hz].  The frame must span
    at least two periods of floor_hz so the correlation window keeps half its
    length at the largest lag.
    """
    waveform = np.asarray(waveform, dtype=np.float64)
    if waveform.size == 0:
        raise EmptyWaveformError("cannot compute pitch of an empty waveform")
    if not 0 < floor_hz < ceil_hz:
        raise BadPitchRangeError(f"need 0 < floor_hz < ceil_hz, got ({floor_hz}, {ceil_hz})")
    if frame_len_s < 2.0 / floor_hz:
        raise BadPitchRangeError(
            f"frame_len_s={frame_len_s} too short for floor_hz={floor_hz}"
            f" (needs >= {2.0 / floor_hz})"
        )
    frame_len, hop = _frame_params(sample_rate, frame_len_s, hop_s)
    lag_min = int(math.ceil(sample_rate / ceil_hz))
    lag_max = int(math.floor(sample_rate / floor_hz))
    lag_min = max(1, lag_min)
    lag_max = min(lag_max, frame_len - 1)
    if lag_min > lag_max:
        raise BadPitchRangeError("pitch range leaves no admissible lag")

    frames = _kernels.frame_signal(waveform, frame_len, hop)
    # One extra lag on each side so boundary peaks can still be interpolated.
    lag_lo = max(1, lag_min - 1)
    lag_hi = min(lag_max + 1, frame_len - 1)
    r = _kernels.ncf_matrix(frames, lag_lo, lag_hi)

    lo = lag_min - lag_lo           # index of lag_min within r columns
    hi = lag_max - lag_lo           # index of lag_max
    pitch = np.full(frames.shape[0], np.nan)
    for i in range(frames.shape[0]):
        row = r[i]
        window = row[lo : hi + 1]
        best = window.max()
        if best < clarity:
            continue
        lag = _pick_peak_lag(row, lo, hi, best) + lag_lo
        freq = sample_rate / _parabolic_lag(row, lag - lag_lo, lag)
        pitch[i] = min(max(freq, floor_hz), ceil_hz)
    return pitch


def _pick_peak_lag(row: np.ndarray, lo: int, hi: int, best: float) -> int:
    """Smallest-lag local maximum within PEAK_KEEP_RATIO of the best value."""
    keep = best * PEAK_KEEP_RATIO
    for k in range(lo, hi + 1):
        v = row[k]
        if v < keep:
            continue
        left = row[k - 1] if k > 0 else -np.inf
        right = row[k + 1] if k + 1 < row.shape[0] else -np.inf
        if v >= left and v >= right:
            return k
    return lo + int(np.argmax(row[lo : hi + 1]))


def _parabolic_lag(row: np.ndarray, k: int, lag: int) -> float:
    """Refine an integer peak by fitting a parabola through its neighbors."""
    if k <= 0 or k + 1 >= row.shape[0]:
        return float(lag)
    a, b, c = row[k - 1], row[k], row[k + 1]
    denom = a - 2.0 * b + c
    if denom >= 0.0:
        return float(lag)
    delta = 0.5 * (a - c) / denom
    delta = min(0.5, max(-0.5, delta))
    return lag + delta


def compute_frame_track(waveform: np.ndarray, sample_rate: float,
                        frame_len_s: float = DEFAULT_FRAME_LEN_S,
                        hop_s: float = DEFAULT_HOP_S,
                        floor_hz: float = DEFAULT_FLOOR_HZ,
                        ceil_hz: float = DEFAULT_CEIL_HZ,
                        clarity: float = CLARITY_THRESHOLD) -> FrameTrack:
    """Pitch and energy on the shared frame grid."""
    return FrameTrack(
        frame_len_s=frame_len_s,
        hop_s=hop_s,
        pitch_hz=compute_pitch(waveform, sample_rate, frame_len_s, hop_s,
                               floor_hz, ceil_hz, clarity),
        energy=compute_energy(waveform, sample_rate, frame_len_s, hop_s),
    )


def three_period_averages(series: np.ndarray) -> PeriodAverages:
    """Split a series into duration thirds and average the present values.

    Period i (1-based) covers indices [floor((i-1)N/3), floor(iN/3)).
    NaN entries mark absent values and are left out of both the mean and
    n_used; a period with no present values gets a None average.
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.shape[0]
    if n == 0:
        raise EmptySeriesError("cannot average an empty series")
    bounds = [(i * n) // 3 for i in range(4)]
    avgs: list[float | None] = []
    counts: list[int] = []
    for i in range(3):
        chunk = series[bounds[i] : bounds[i + 1]]
        present = chunk[~np.isnan(chunk)]
        counts.append(int(present.size))
        avgs.append(float(present.mean()) if present.size else None)
    return PeriodAverages(p1=avgs[0], p2=avgs[1], p3=avgs[2],
                          n_used=(counts[0], counts[1], counts[2]))
