#!/usr/bin/env python3
"""Benchmark the two alignment-kernel paths on synthetic transcripts.

Compares the numba @njit fill against the pure-numpy row sweep on
Mandarin-like strings at transcript-realistic lengths, and sanity-checks
that both matrices agree. Run directly:

    python benchmarks/bench_alignment.py [--sizes 200,1000,4000]

Select the numpy path at runtime everywhere else with I2E_PURE_NUMPY=1.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from i2e.metrics.alignment import (
    NUMBA_AVAILABLE,
    _fill_matrix_numpy,
    codepoints,
    traceback,
)

ALPHABET = "的一是了我不人在他有这上们来到时大地为子中你说生国年着就那和要她出也得里后自以会家可下而过天去能对小多然于心学么之都好看起发当没成只如事把还用第样道想作种开"


def synthetic_pair(n: int, error_rate: float, rng: random.Random) -> tuple[str, str]:
    ref = "".join(rng.choice(ALPHABET) for _ in range(n))
    hyp = []
    for ch in ref:
        roll = rng.random()
        if roll < error_rate * 0.6:
            hyp.append(rng.choice(ALPHABET))     # substitution
        elif roll < error_rate * 0.8:
            continue                              # deletion
        elif roll < error_rate:
            hyp.append(ch)
            hyp.append(rng.choice(ALPHABET))     # insertion
        else:
            hyp.append(ch)
    return ref, "".join(hyp)


def time_fill(fill, ref: np.ndarray, hyp: np.ndarray, repeats: int) -> tuple[float, np.ndarray]:
    best = float("inf")
    dp = None
    for _ in range(repeats):
        start = time.perf_counter()
        dp = fill(ref, hyp)
        best = min(best, time.perf_counter() - start)
    return best, dp


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="200,1000,4000",
                        help="comma-separated reference lengths")
    parser.add_argument("--error-rate", type=float, default=0.1)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    rng = random.Random(20260808)
    if NUMBA_AVAILABLE:
        from i2e.metrics.alignment import _fill_matrix_numba
        # pay the JIT compile outside the timings
        warm = codepoints("预热")
        _fill_matrix_numba(warm, warm)
    else:
        print("numba not installed; benchmarking the numpy path only\n")

    header = f"{'n_ref':>7} {'n_hyp':>7} {'numpy (s)':>12}"
    if NUMBA_AVAILABLE:
        header += f" {'numba (s)':>12} {'speedup':>9}"
    print(header)
    for n in sizes:
        ref_s, hyp_s = synthetic_pair(n, args.error_rate, rng)
        ref, hyp = codepoints(ref_s), codepoints(hyp_s)
        t_numpy, dp_numpy = time_fill(_fill_matrix_numpy, ref, hyp, args.repeats)
        row = f"{len(ref_s):>7} {len(hyp_s):>7} {t_numpy:>12.4f}"
        if NUMBA_AVAILABLE:
            t_numba, dp_numba = time_fill(_fill_matrix_numba, ref, hyp,
                                          args.repeats)
            assert np.array_equal(dp_numpy, dp_numba), "kernel mismatch"
            row += f" {t_numba:>12.4f} {t_numpy / t_numba:>8.1f}x"
        print(row)
        ops = traceback(dp_numpy, ref, hyp)
        errors = sum(1 for op, _, _ in ops if op != 0)
        print(f"{'':>7} {'':>7}   distance={errors}  cer={errors / len(ref_s):.4f}")


if __name__ == "__main__":
    main()
