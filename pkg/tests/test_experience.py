"""
Tests for transitions, segments, quality and the replay buffer.
"""

import numpy as np
import pytest

from graftrl.exceptions import DimensionError, InvalidInputError, NotReadyError
from graftrl.experience import (
    Provenance,
    ReplayBuffer,
    Segment,
    Transition,
    quality,
    read_trajectories_csv,
    write_trajectories_csv,
)

from conftest import make_trajectory


def tr(i, synthetic=False, r=0.0):
    t = Transition([float(i), 0.0], [0.0], r, [float(i) + 1, 0.0])
    return t.as_synthetic() if synthetic else t


class TestTransition:
    def test_arrays_are_read_only_copies(self):
        s = np.array([1.0, 2.0])
        t = Transition(s, [0.5], 1.0, [2.0, 3.0])
        s[0] = 99.0
        assert t.s[0] == 1.0
        with pytest.raises(ValueError):
            t.s[0] = 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            Transition([1.0, 2.0], [0.0], 0.0, [1.0])

    def test_non_finite_reward(self):
        with pytest.raises(InvalidInputError):
            Transition([1.0], [0.0], float('nan'), [1.0])

    def test_as_synthetic_keeps_fields(self):
        t = Transition([1.0], [0.2], 3.0, [2.0], terminal=True)
        syn = t.as_synthetic()
        assert syn.is_synthetic and not t.is_synthetic
        assert syn.fingerprint() == t.fingerprint()


class TestSegment:
    def test_empty_segment_rejected(self):
        with pytest.raises(InvalidInputError):
            Segment([])

    def test_slicing_returns_segments(self):
        traj = make_trajectory([1.0, 2.0, 3.0])
        tail = traj[1:]
        assert isinstance(tail, Segment)
        assert len(tail) == 2
        np.testing.assert_array_equal(tail.init_state, traj[1].s)
        np.testing.assert_array_equal(traj.term_state, traj[2].s_next)

    def test_trajectory_is_authentic(self):
        traj = make_trajectory([1.0])
        assert traj.is_authentic


class TestQuality:
    @pytest.mark.parametrize("rewards,expected", [([1, 2, 3], 6.0), ([0], 0.0), ([-1.5, 2.5], 1.0)])
    def test_examples(self, rewards, expected):
        assert quality(make_trajectory(rewards)) == pytest.approx(expected)

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            quality([])

    def test_additive_over_concatenation(self, rng):
        for _ in range(50):
            a = list(rng.normal(size=rng.integers(1, 6)))
            b = list(rng.normal(size=rng.integers(1, 6)))
            joined = quality(make_trajectory(a + b))
            assert joined == pytest.approx(quality(make_trajectory(a)) + quality(make_trajectory(b)))


class TestReplayBuffer:
    def test_push_and_ring_eviction(self):
        buf = ReplayBuffer(capacity=3, warmup=1)
        buf.push(tr(0))
        assert len(buf) == 1
        for i in range(1, 5):
            buf.push(tr(i))
        assert len(buf) == 3
        assert [t.s[0] for t in buf.transitions()] == [2.0, 3.0, 4.0]

    def test_synthetic_count_tracks_pushes(self):
        buf = ReplayBuffer(capacity=10, warmup=1)
        buf.push(tr(0))
        buf.push(tr(1, synthetic=True))
        assert buf.synthetic_count == 1
        assert buf.authentic_count == 1

    def test_sample_below_warmup(self, rng):
        buf = ReplayBuffer(capacity=10, warmup=5)
        buf.push(tr(0))
        with pytest.raises(NotReadyError):
            buf.sample_minibatch(2, rng)
        assert buf.sample_minibatch(0, rng) == []

    def test_sample_from_singleton(self, rng):
        buf = ReplayBuffer(capacity=10, warmup=1)
        t = tr(0)
        buf.push(t)
        assert buf.sample_minibatch(3, rng) == [t, t, t]

    def test_sampling_is_reproducible(self):
        buf = ReplayBuffer(capacity=100, warmup=1)
        buf.extend(tr(i) for i in range(50))
        a = buf.sample_minibatch(20, np.random.default_rng(3))
        b = buf.sample_minibatch(20, np.random.default_rng(3))
        assert a == b

    def test_remove_synthetic_examples(self):
        buf = ReplayBuffer(capacity=10, warmup=1)
        buf.extend([tr(0), tr(1)])
        assert buf.remove_synthetic() == 0
        assert len(buf) == 2

        buf = ReplayBuffer(capacity=10, warmup=1)
        a1, s1, a2, s2 = tr(0), tr(1, True), tr(2), tr(3, True)
        buf.extend([a1, s1, a2, s2])
        assert buf.remove_synthetic() == 2
        assert buf.transitions() == [a1, a2]

        buf = ReplayBuffer(capacity=10, warmup=1)
        buf.extend(tr(i, True) for i in range(4))
        assert buf.remove_synthetic() == 4
        assert len(buf) == 0

    def test_remove_after_wraparound_keeps_age_order(self):
        buf = ReplayBuffer(capacity=4, warmup=1)
        buf.extend([tr(0), tr(1, True), tr(2), tr(3, True), tr(4), tr(5)])
        # Ring now holds 2, 3(syn), 4, 5 oldest first.
        assert buf.remove_synthetic() == 1
        assert [t.s[0] for t in buf.transitions()] == [2.0, 4.0, 5.0]
        buf.extend([tr(6), tr(7)])
        assert [t.s[0] for t in buf.transitions()] == [4.0, 5.0, 6.0, 7.0]

    def test_synthetic_ratio(self):
        buf = ReplayBuffer(capacity=20, warmup=1)
        assert buf.synthetic_ratio() == 0.0
        buf.extend(tr(i, synthetic=i < 3) for i in range(10))
        assert buf.synthetic_ratio() == pytest.approx(0.3)
        buf.remove_synthetic()
        assert buf.synthetic_ratio() == 0.0

    def test_count_matches_scan(self, rng):
        buf = ReplayBuffer(capacity=25, warmup=1)
        for step in range(500):
            if rng.random() < 0.05:
                buf.remove_synthetic()
            else:
                buf.push(tr(step, synthetic=bool(rng.random() < 0.4)))
            stored = buf.transitions()
            assert buf.synthetic_count == sum(t.is_synthetic for t in stored)
            assert buf.synthetic_count + buf.authentic_count == len(buf) <= 25


def test_trajectory_csv_dump(tmp_path):
    traj = make_trajectory([1.0, -0.5], state_dim=2)
    syn = [t.as_synthetic() for t in traj]
    path = str(tmp_path / 'dump' / 'trajectories.csv')
    rows = write_trajectories_csv(path, [(1, traj), (2, Segment(syn))])
    assert rows == 4
    with open(path) as f:
        assert f.readline().strip() == 'episode_id,step,s,a,r,s_next,provenance'
    loaded = read_trajectories_csv(path)
    assert [episode_id for episode_id, _ in loaded] == [1, 2]
    assert loaded[1][1][0].provenance is Provenance.SYNTHETIC
    assert [t.fingerprint() for t in loaded[0][1]] == [t.fingerprint() for t in traj]
