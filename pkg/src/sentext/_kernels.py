"""Numeric kernels for frame-wise audio analysis.

The normalized cross-correlation (NCF) sweep is the hot loop of the whole
pipeline, so it ships in two equivalent implementations:

* a numba ``@njit`` version (default when numba imports), and
* a pure-numpy FFT version.

Set ``SENTEXT_DISABLE_NUMBA=1`` to force the numpy path.  Both compute, for
frame w of length n and lag l:

    r(l) = sum_{i<n-l} w[i] w[i+l]
           / sqrt( sum_{i<n-l} w[i]^2 * sum_{i>=l} w[i]^2 )

``benchmarks/bench_pitch.py`` compares the two paths.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLE = os.environ.get("SENTEXT_DISABLE_NUMBA", "") not in ("", "0")

if not _DISABLE:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _DISABLE = True

USING_NUMBA = not _DISABLE


def frame_starts(n_samples: int, hop: int) -> int:
    """Number of frames: one start every `hop` samples while inside the signal."""
    return int(math.ceil(n_samples / hop))


def frame_signal(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Cut x into overlapping frames, zero-padding the trailing partials."""
    x = np.asarray(x, dtype=np.float64)
    n_frames = frame_starts(x.shape[0], hop)
    padded = np.zeros((n_frames - 1) * hop + frame_len, dtype=np.float64)
    padded[: x.shape[0]] = x
    stride = padded.strides[0]
    frames = np.lib.stride_tricks.as_strided(
        padded, shape=(n_frames, frame_len), strides=(hop * stride, stride)
    )
    return np.ascontiguousarray(frames)


def rms_energy_frames(frames: np.ndarray) -> np.ndarray:
    """Root mean square per frame row."""
    return np.sqrt(np.mean(np.square(frames), axis=1))


def _ncf_matrix_numpy(frames: np.ndarray, lag_lo: int, lag_hi: int) -> np.ndarray:
    """FFT autocorrelation plus prefix-sum normalization, all frames at once."""
    n_frames, frame_len = frames.shape
    nfft = 1 << int(math.ceil(math.log2(2 * frame_len)))
    spectrum = np.fft.rfft(frames, n=nfft, axis=1)
    acorr = np.fft.irfft(spectrum.real**2 + spectrum.imag**2, n=nfft, axis=1)

    sq = np.square(frames)
    cum = np.zeros((n_frames, frame_len + 1), dtype=np.float64)
    np.cumsum(sq, axis=1, out=cum[:, 1:])
    total = cum[:, -1][:, None]

    lags = np.arange(lag_lo, lag_hi + 1)
    e_head = cum[:, frame_len - lags]
    e_tail = total - cum[:, lags]
    den = np.sqrt(e_head * e_tail)
    num = acorr[:, lag_lo : lag_hi + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0.0, num / den, 0.0)
    return r


if USING_NUMBA:

    @njit(cache=True)
    def _ncf_matrix_numba(frames, lag_lo, lag_hi):  # pragma: no cover - jitted
        n_frames, frame_len = frames.shape
        n_lags = lag_hi - lag_lo + 1
        r = np.zeros((n_frames, n_lags))
        cum = np.zeros(frame_len + 1)
        for f in range(n_frames):
            w = frames[f]
            for i in range(frame_len):
                cum[i + 1] = cum[i] + w[i] * w[i]
            total = cum[frame_len]
            for k in range(n_lags):
                lag = lag_lo + k
                num = 0.0
                for i in range(frame_len - lag):
                    num += w[i] * w[i + lag]
                den = math.sqrt(cum[frame_len - lag] * (total - cum[lag]))
                if den > 0.0:
                    r[f, k] = num / den
        return r


def ncf_matrix(frames: np.ndarray, lag_lo: int, lag_hi: int) -> np.ndarray:
    """r[i, k] = normalized cross-correlation of frame i at lag lag_lo + k."""
    if not 1 <= lag_lo <= lag_hi < frames.shape[1]:
        raise ValueError("lag range must satisfy 1 <= lag_lo <= lag_hi < frame_len")
    frames = np.ascontiguousarray(frames, dtype=np.float64)
    if USING_NUMBA:
        return _ncf_matrix_numba(frames, lag_lo, lag_hi)
    return _ncf_matrix_numpy(frames, lag_lo, lag_hi)
