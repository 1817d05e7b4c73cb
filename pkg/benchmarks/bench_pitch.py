"""Time the two NCF kernel implementations on one realistic workload.

The shapes mirror a describe run at 16 kHz with the default frame grid:
832-sample frames, lag sweep 40..320 (400 Hz down to 50 Hz).  Run with
SENTEXT_DISABLE_NUMBA unset so both kernels are available.
"""

import argparse
import time

import numpy as np

from sentext import _kernels


def best_of(fn, frames, lag_lo, lag_hi, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(frames, lag_lo, lag_hi)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=3000,
                        help="number of analysis frames (default 3000 = 30 s)")
    parser.add_argument("--frame-len", type=int, default=832)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    frames = rng.standard_normal((args.frames, args.frame_len))
    lag_lo, lag_hi = 40, 320
    print(f"workload: {args.frames} frames x {args.frame_len} samples, "
          f"lags {lag_lo}..{lag_hi}, best of {args.repeats}")

    t_numpy = best_of(_kernels._ncf_matrix_numpy, frames, lag_lo, lag_hi,
                      args.repeats)
    print(f"numpy (FFT): {t_numpy * 1e3:9.1f} ms")

    if not _kernels.USING_NUMBA:
        print("numba kernel unavailable (SENTEXT_DISABLE_NUMBA set?); "
              "nothing to compare")
        return

    _kernels._ncf_matrix_numba(frames[:2], lag_lo, lag_hi)  # compile/load
    t_numba = best_of(_kernels._ncf_matrix_numba, frames, lag_lo, lag_hi,
                      args.repeats)
    print(f"numba (jit): {t_numba * 1e3:9.1f} ms")
    ratio = t_numpy / t_numba
    faster, slower = ("numba", "numpy") if ratio >= 1 else ("numpy", "numba")
    print(f"{faster} is {max(ratio, 1 / ratio):.2f}x faster than {slower}")


if __name__ == "__main__":
    main()
