"""
Tests for state normalization and the 1-Wasserstein distance.
"""

import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from graftrl.distance import (
    normalize_rows,
    normalize_to_distribution,
    state_distance,
    state_distances,
    wasserstein1,
)
from graftrl.exceptions import DimensionError, InvalidInputError


def transport_lp(p, q):
    """Optimal transport cost on support 0..n-1 with |i - j| ground cost, solved as an LP."""
    n = len(p)
    cost = np.array([abs(i - j) for i, j in itertools.product(range(n), range(n))], dtype=float)
    a_eq = np.zeros((2 * n, n * n))
    for i in range(n):
        a_eq[i, i * n:(i + 1) * n] = 1.0
        a_eq[n + i, i::n] = 1.0
    b_eq = np.concatenate([p, q])
    result = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method='highs')
    assert result.success
    return result.fun


def transport_northwest(p, q):
    """Cost of the monotone (north-west corner) coupling, built explicitly."""
    p = list(p)
    q = list(q)
    i = j = 0
    total = 0.0
    while i < len(p) and j < len(q):
        moved = min(p[i], q[j])
        total += moved * abs(i - j)
        p[i] -= moved
        q[j] -= moved
        if p[i] <= q[j]:
            i += 1
        else:
            j += 1
    return total


def random_distribution(rng, n):
    # Multiples of 1/20 keep the LP vertex exact.
    counts = rng.integers(0, 5, size=n).astype(float)
    if counts.sum() == 0:
        counts[rng.integers(0, n)] = 1.0
    return counts / counts.sum()


class TestNormalize:
    def test_examples(self):
        np.testing.assert_allclose(normalize_to_distribution([0, 2]), [0, 1])
        np.testing.assert_allclose(normalize_to_distribution([3, 3, 3]), [1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(normalize_to_distribution([1, 3]), [0, 1])

    def test_always_a_distribution(self, rng):
        for _ in range(200):
            s = rng.normal(scale=rng.uniform(0.01, 100), size=rng.integers(1, 9))
            p = normalize_to_distribution(s)
            assert np.all(p >= 0)
            assert abs(p.sum() - 1.0) <= 1e-12

    def test_single_component_is_point_mass(self):
        np.testing.assert_array_equal(normalize_to_distribution([-4.2]), [1.0])

    @pytest.mark.parametrize("bad", [[], [1.0, np.nan], [np.inf, 0.0], [[1.0, 2.0]]])
    def test_rejects_invalid_states(self, bad):
        with pytest.raises(InvalidInputError):
            normalize_to_distribution(bad)

    def test_rows_match_single_vector_version(self, rng):
        states = rng.normal(size=(30, 4))
        states[3] = 2.5
        rows = normalize_rows(states)
        for s, row in zip(states, rows):
            np.testing.assert_array_equal(row, normalize_to_distribution(s))


class TestWasserstein:
    def test_examples(self):
        assert wasserstein1([0.2, 0.8], [0.2, 0.8]) == 0.0
        assert wasserstein1([1, 0], [0, 1]) == pytest.approx(1.0)
        assert wasserstein1([0.5, 0.5, 0], [0, 0.5, 0.5]) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            wasserstein1([1.0], [0.5, 0.5])

    def test_matches_transport_oracles(self, rng):
        for _ in range(500):
            n = int(rng.integers(1, 7))
            p = random_distribution(rng, n)
            q = random_distribution(rng, n)
            w = wasserstein1(p, q)
            assert w == pytest.approx(transport_northwest(p, q), abs=1e-9)
            # LP solver tolerances are looser than the closed form.
            assert w == pytest.approx(transport_lp(p, q), abs=1e-7)

    def test_metric_axioms(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            p, q, r = (rng.dirichlet(np.ones(n)) for _ in range(3))
            pq = wasserstein1(p, q)
            assert pq >= 0
            assert pq == pytest.approx(wasserstein1(q, p), abs=1e-9)
            assert wasserstein1(p, p) == 0.0
            assert pq <= wasserstein1(p, r) + wasserstein1(r, q) + 1e-9


class TestStateDistance:
    def test_examples(self):
        s = np.array([0.3, -1.0, 2.0])
        assert state_distance(s, s) == 0.0
        assert state_distance([2, 0], [0, 2]) == pytest.approx(1.0)
        assert state_distance([0, 1], [0, 3]) == 0.0

    def test_pseudo_metric(self, rng):
        for _ in range(200):
            d = int(rng.integers(1, 6))
            a, b = rng.normal(size=d), rng.normal(size=d)
            ab = state_distance(a, b)
            assert ab >= 0
            assert ab == pytest.approx(state_distance(b, a), abs=1e-12)
        # Distinct states can sit at distance zero.
        assert state_distance([1.0, 2.0], [5.0, 9.0]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            state_distance([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_pluggable_normalizer(self):
        def softmax(s):
            e = np.exp(np.asarray(s, dtype=float))
            return e / e.sum()

        assert state_distance([0, 1], [0, 3], normalizer=softmax) > 0

    def test_batched_distances_match(self, rng):
        query = rng.normal(size=4)
        keys = rng.normal(size=(25, 4))
        expected = [state_distance(query, k) for k in keys]
        np.testing.assert_array_equal(state_distances(query, keys), expected)
        assert state_distances(query, np.empty((0, 4))).size == 0
