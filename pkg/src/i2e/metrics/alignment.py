"""Levenshtein alignment kernels.

Filling the (n+1) x (m+1) unit-cost edit matrix is the one numeric hot
loop in the package: session transcripts run to tens of thousands of
characters, so the fill is JIT-compiled with numba when available. A
pure-numpy row-sweep fallback (same results, bit for bit) is selected
when numba is missing or ``I2E_PURE_NUMPY=1`` is set. See
``benchmarks/bench_alignment.py`` for a comparison of the two paths.

Traceback is O(n+m) and stays in Python so the deterministic
tie-breaking (match > substitution > deletion > insertion) lives in
exactly one place.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via I2E_PURE_NUMPY instead
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return decorator

# Edit operation codes used in traceback output.
OP_MATCH = 0
OP_SUBSTITUTE = 1
OP_DELETE = 2
OP_INSERT = 3

OP_NAMES = {OP_MATCH: "match", OP_SUBSTITUTE: "substitute",
            OP_DELETE: "delete", OP_INSERT: "insert"}


def use_pure_numpy() -> bool:
    if os.environ.get("I2E_PURE_NUMPY", "") not in ("", "0"):
        return True
    return not NUMBA_AVAILABLE


def codepoints(text: str) -> np.ndarray:
    if not text:
        return np.empty(0, dtype=np.int32)
    return np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32).astype(np.int32)


@njit(cache=True)
def _fill_matrix_numba(ref: np.ndarray, hyp: np.ndarray) -> np.ndarray:  # pragma: no cover - numba jit
    n, m = ref.shape[0], hyp.shape[0]
    dp = np.empty((n + 1, m + 1), dtype=np.int32)
    for j in range(m + 1):
        dp[0, j] = j
    for i in range(1, n + 1):
        dp[i, 0] = i
        ref_ch = ref[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ref_ch == hyp[j - 1] else 1
            best = dp[i - 1, j - 1] + cost
            dele = dp[i - 1, j] + 1
            if dele < best:
                best = dele
            ins = dp[i, j - 1] + 1
            if ins < best:
                best = ins
            dp[i, j] = best
    return dp


def _fill_matrix_numpy(ref: np.ndarray, hyp: np.ndarray) -> np.ndarray:
    """Row-sweep fill: the left-neighbor dependency inside a row is
    resolved with a running-minimum transform, so each row is one
    vectorized pass."""
    n, m = ref.shape[0], hyp.shape[0]
    dp = np.empty((n + 1, m + 1), dtype=np.int32)
    dp[0, :] = np.arange(m + 1, dtype=np.int32)
    offsets = np.arange(m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        prev = dp[i - 1]
        cost = (hyp != ref[i - 1]).astype(np.int32)
        # Candidates ignoring same-row insertions; slot 0 is the row head.
        cand = np.empty(m + 1, dtype=np.int32)
        cand[0] = i
        np.minimum(prev[:-1] + cost, prev[1:] + 1, out=cand[1:])
        # dp[i, j] = min over k <= j of cand[k] + (j - k)
        dp[i] = np.minimum.accumulate(cand - offsets) + offsets
    return dp


def fill_matrix(ref: np.ndarray, hyp: np.ndarray) -> np.ndarray:
    if use_pure_numpy():
        return _fill_matrix_numpy(ref, hyp)
    return _fill_matrix_numba(ref, hyp)


def traceback(dp: np.ndarray, ref: np.ndarray, hyp: np.ndarray) -> list[tuple[int, int, int]]:
    """Walk the matrix back to a minimal edit script.

    Returns (op, ref_pos, hyp_pos) triples in left-to-right order; the
    position fields index the consumed character (or the gap position
    for the side an insert/delete does not consume). Ties resolve as
    match > substitution > deletion > insertion.
    """
    i, j = int(ref.shape[0]), int(hyp.shape[0])
    ops: list[tuple[int, int, int]] = []
    while i > 0 or j > 0:
        here = dp[i, j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and here == dp[i - 1, j - 1]:
            ops.append((OP_MATCH, i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and here == dp[i - 1, j - 1] + 1:
            ops.append((OP_SUBSTITUTE, i - 1, j - 1))
            i -= 1
            j -= 1
        elif i > 0 and here == dp[i - 1, j] + 1:
            ops.append((OP_DELETE, i - 1, j))
            i -= 1
        else:
            ops.append((OP_INSERT, i, j - 1))
            j -= 1
    ops.reverse()
    return ops


def align(ref_text: str, hyp_text: str) -> tuple[int, int, int, list[tuple[int, int, int]]]:
    """(substitutions, deletions, insertions, ops) for two strings."""
    ref = codepoints(ref_text)
    hyp = codepoints(hyp_text)
    dp = fill_matrix(ref, hyp)
    ops = traceback(dp, ref, hyp)
    subs = sum(1 for op, _, _ in ops if op == OP_SUBSTITUTE)
    dels = sum(1 for op, _, _ in ops if op == OP_DELETE)
    ins = sum(1 for op, _, _ in ops if op == OP_INSERT)
    return subs, dels, ins, ops
