"""
Learning-curve metrics: AUC, relative AUC improvement, policy quality.
"""

import math
from typing import Iterable, Sequence, Tuple

import numpy as np

from .exceptions import InvalidInputError, UndefinedBaselineError


def auc(returns: Iterable[float]) -> float:
    """Area under a raw learning curve: the plain sum of per-episode returns."""
    values = np.asarray(list(returns), dtype=np.float64)
    if values.size == 0:
        raise InvalidInputError("auc of an empty learning curve")
    return float(values.sum())


def auc_improvement(a: float, b: float) -> float:
    """(A - B) / |B|; e.g. 1.0 means A is twice a positive baseline B."""
    if b == 0:
        raise UndefinedBaselineError("AUC improvement is undefined for a zero baseline")
    return (a - b) / abs(b)


def policy_quality(returns: Sequence[float], k: int) -> float:
    """Mean return over the final ``k`` episodes."""
    if k < 1:
        raise InvalidInputError(f"policy quality window must be at least 1, got {k}")
    if len(returns) < k:
        raise InvalidInputError(f"run of {len(returns)} episodes is shorter than window {k}")
    return float(np.mean(np.asarray(returns[-k:], dtype=np.float64)))


def summarize(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation across seeds (0 for a single seed)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std
