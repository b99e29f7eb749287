"""Deterministic evenly spaced sampling of dataset indices.

``sample_indices(N, S)`` picks floor(k * (N - 1) / S) for k = 0..S-1:
an even stride over the full index range that always starts at 0 and is
reproducible with no RNG involved.  When S approaches N the floor makes
neighbouring picks collide; duplicates are removed order-preserving and
a SampleCollisionWarning reports how many were dropped.

The hot loop is a division-free increment walk (add floor(M/S), carry
the remainder) compiled with numba when available; a vectorized numpy
path covers interpreters without a working JIT.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import InvalidArg, SampleCollisionWarning

try:  # pragma: no cover - exercised implicitly by every call when numba works
    from numba import njit

    @njit(cache=True)
    def _stride_core(N: int, S: int) -> np.ndarray:
        # Emits floor(k*M/S) for k=0..S-1 with duplicates already skipped.
        M = N - 1
        out = np.empty(S, dtype=np.int64)
        step_q = M // S
        step_r = M % S
        q = 0
        r = 0
        n = 0
        prev = -1
        for _ in range(S):
            if q != prev:
                out[n] = q
                n += 1
                prev = q
            q += step_q
            r += step_r
            if r >= S:
                q += 1
                r -= S
        return out[:n]

    HAVE_JIT = True
except ImportError:  # pragma: no cover
    HAVE_JIT = False

    def _stride_core(N: int, S: int) -> np.ndarray:
        k = np.arange(S, dtype=np.int64)
        picks = (k * (N - 1)) // S
        # np.unique would sort; picks are already nondecreasing, so a
        # neighbour-difference mask dedups while keeping first occurrence.
        keep = np.empty(S, dtype=bool)
        keep[0] = True
        np.not_equal(picks[1:], picks[:-1], out=keep[1:])
        return picks[keep]


def sample_indices(dataset_size: int, sample_count: int) -> list[int]:
    """Evenly spaced, strictly increasing indices into a dataset.

    Args:
        dataset_size: N, number of records available (>= 1).
        sample_count: S, number of picks requested (1 <= S <= N).

    Returns:
        Strictly increasing indices, each in [0, N-1], starting at 0.
        Fewer than S entries come back when stride collisions occured;
        that case also emits SampleCollisionWarning.
    """
    N, S = dataset_size, sample_count
    if not isinstance(N, int) or not isinstance(S, int):
        raise InvalidArg("dataset_size and sample_count must be integers")
    if N < 1:
        raise InvalidArg(f"dataset_size must be >= 1, got {N}")
    if S < 1 or S > N:
        raise InvalidArg(f"sample_count must be in [1, {N}], got {S}")
    picks = _stride_core(N, S)
    if len(picks) < S:
        warnings.warn(
            f"even stride over N={N} collapsed {S} picks to {len(picks)} "
            "unique indices",
            SampleCollisionWarning,
            stacklevel=2,
        )
    return [int(i) for i in picks]
