"""
Shared fixtures for the graftrl test suite.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'src'))

from graftrl import Config  # noqa: E402
from graftrl.experience import Trajectory, Transition  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_config():
    """Small networks and short warmups so a few episodes exercise every code path."""
    return Config(
        hidden_sizes=(8, 8),
        tutor_hidden_sizes=(8, 8),
        warmup=50,
        tutor_warmup=5,
        batch_size=8,
        tutor_batch_size=4,
        env_params={'max_steps': 20},
    )


def make_trajectory(rewards, state_dim=3, start=0.0, step=0.1, action_dim=1):
    """A straight-line trajectory with the given rewards; states stay inside one unit bin."""
    transitions = []
    for i, r in enumerate(rewards):
        s = np.full(state_dim, start) + i * step * np.arange(1, state_dim + 1) / state_dim
        s_next = np.full(state_dim, start) + (i + 1) * step * np.arange(1, state_dim + 1) / state_dim
        transitions.append(Transition(s, np.zeros(action_dim), r, s_next))
    return Trajectory(transitions)
