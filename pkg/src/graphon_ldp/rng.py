"""Reproducible random streams.

All randomness comes from numpy's Philox4x64-10 counter-based generator keyed
by the master seed.  Substream ``k`` is the master stream jumped ahead by
``k * 2**128`` draws, so worker ``k`` sees the same numbers regardless of how
many workers run or in which order they are scheduled.
"""

from __future__ import annotations

import os

import numpy as np

THREADS_ENV = "GRAPHON_LDP_THREADS"
DEFAULT_SEED = 0


def master(seed: int = DEFAULT_SEED) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def substream(seed: int, k: int) -> np.random.Generator:
    """Independent stream number ``k`` derived from ``seed`` by jump-ahead."""
    bg = np.random.Philox(key=int(seed))
    return np.random.Generator(bg.jumped(int(k)) if k else bg)


def worker_count(default: int | None = None) -> int:
    """Worker cap from ``GRAPHON_LDP_THREADS`` (falls back to ``default`` or the CPU count)."""
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n >= 1:
            return n
    return default or (os.cpu_count() or 1)
