"""
State distances used by every grafting decision.

A state vector is turned into a probability mass over the integer support
0..d-1 (min-shift, then L1 normalization; constant vectors map to the
uniform distribution) and two states are compared with the 1-Wasserstein
distance between those masses. On a unit-spaced 1-D support W1 is the L1
distance between the cumulative sums, so no transport plan is ever built.
"""

from typing import Callable, Sequence, Union

import numpy as np

from .exceptions import DimensionError, InvalidInputError

ArrayLike = Union[Sequence[float], np.ndarray]
Normalizer = Callable[[ArrayLike], np.ndarray]


def _as_state(s: ArrayLike) -> np.ndarray:
    arr = np.asarray(s, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"state must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"state has non-finite entries: {arr}")
    return arr


def normalize_to_distribution(s: ArrayLike) -> np.ndarray:
    """Map a real state vector to a distribution over its component indices."""
    arr = _as_state(s)
    shifted = arr - arr.min()
    total = shifted.sum()
    if total == 0.0:
        return np.full(arr.size, 1.0 / arr.size)
    return shifted / total


def wasserstein1(p: ArrayLike, q: ArrayLike) -> float:
    """W1 between two distributions on the same unit-spaced support."""
    p_arr = np.asarray(p, dtype=np.float64)
    q_arr = np.asarray(q, dtype=np.float64)
    if p_arr.shape != q_arr.shape:
        raise DimensionError(f"support mismatch: {p_arr.shape} vs {q_arr.shape}")
    return float(np.abs(np.cumsum(p_arr) - np.cumsum(q_arr)).sum())


def state_distance(
    s: ArrayLike,
    s_: ArrayLike,
    normalizer: Normalizer = normalize_to_distribution,
) -> float:
    """Dis(s, s_) = W1(P(s), P(s_))."""
    a = _as_state(s)
    b = _as_state(s_)
    if a.shape != b.shape:
        raise DimensionError(f"state dimensions differ: {a.size} vs {b.size}")
    return wasserstein1(normalizer(a), normalizer(b))


def normalize_rows(states: np.ndarray) -> np.ndarray:
    """Row-wise normalize_to_distribution for a (n, d) array."""
    shifted = states - states.min(axis=1, keepdims=True)
    totals = shifted.sum(axis=1, keepdims=True)
    flat = totals[:, 0] == 0.0
    totals[flat] = 1.0
    out = shifted / totals
    out[flat] = 1.0 / states.shape[1]
    return out


def state_distances(query: ArrayLike, keys: np.ndarray) -> np.ndarray:
    """Dis(query, k) for every row k of ``keys`` in one pass.

    Only used for the default normalization; the arithmetic matches
    ``state_distance`` row by row.
    """
    q = _as_state(query)
    keys = np.asarray(keys, dtype=np.float64)
    if keys.ndim != 2 or keys.shape[1] != q.size:
        raise DimensionError(f"keys of shape {keys.shape} do not match query of size {q.size}")
    if keys.shape[0] == 0:
        return np.empty(0)
    cdf_q = np.cumsum(normalize_to_distribution(q))
    cdf_k = np.cumsum(normalize_rows(keys), axis=1)
    return np.abs(cdf_k - cdf_q).sum(axis=1)
