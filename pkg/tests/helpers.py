"""Test oracles, deliberately independent of the library code paths
they check."""
import functools
import math

import numpy as np


def brute_levenshtein(ref, hyp) -> int:
    """Textbook recursive edit distance with memoization."""
    ref, hyp = list(ref), list(hyp)

    @functools.lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        cost = 0 if ref[i - 1] == hyp[j - 1] else 1
        return min(go(i - 1, j - 1) + cost, go(i - 1, j) + 1, go(i, j - 1) + 1)

    return go(len(ref), len(hyp))


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def make_sine(hz: float, seconds: float = 1.0, sr: int = 22050,
              amplitude: float = 0.3) -> np.ndarray:
    t = np.arange(int(round(seconds * sr))) / sr
    return amplitude * np.sin(2.0 * np.pi * hz * t)
