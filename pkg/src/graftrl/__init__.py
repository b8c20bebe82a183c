"""
graftrl - Experience grafting for off-policy reinforcement learning.

This package synthesizes high-quality trajectories by splicing segments of
authentic trajectories at near-matching states, trains a Tutor agent that
tunes the grafting threshold online, and compares both against plain DDPG
on small deterministic control environments.
"""

from .ddpg import DdpgAgent, DdpgConfig
from .distance import normalize_to_distribution, state_distance, wasserstein1
from .envs import LineWalker, Pendulum, PointGoal, make_env
from .exceptions import (
    ConfigError,
    DimensionError,
    GraftError,
    InvalidInputError,
    NotReadyError,
    ProtocolError,
    RunAbortedError,
    TrainingDivergedError,
    UndefinedBaselineError,
)
from .experience import Provenance, ReplayBuffer, Segment, Trajectory, Transition, quality
from .experiment import ExperimentConfig, report, run_experiment
from .grafting import GraftConfig, SyntheticTrajectory, graft, grafting_error, select_top, union
from .graftrl import Config, autoeg_train, eg_train, noeg_train
from .library import SegmentLibrary, quantize
from .manager import TrainingManager, TutorObservation, tutor_select_epsilon
from .metrics import auc, auc_improvement, policy_quality
from .runlog import EpisodeRecord, RunLog

__version__ = "0.3.0"

__all__ = [
    "Config",
    "TrainingManager",
    "autoeg_train",
    "eg_train",
    "noeg_train",
    "ExperimentConfig",
    "run_experiment",
    "report",
    "normalize_to_distribution",
    "wasserstein1",
    "state_distance",
    "Provenance",
    "Transition",
    "Segment",
    "Trajectory",
    "ReplayBuffer",
    "quality",
    "SegmentLibrary",
    "quantize",
    "GraftConfig",
    "SyntheticTrajectory",
    "grafting_error",
    "union",
    "select_top",
    "graft",
    "DdpgConfig",
    "DdpgAgent",
    "LineWalker",
    "PointGoal",
    "Pendulum",
    "make_env",
    "TutorObservation",
    "tutor_select_epsilon",
    "EpisodeRecord",
    "RunLog",
    "auc",
    "auc_improvement",
    "policy_quality",
    "GraftError",
    "InvalidInputError",
    "DimensionError",
    "ConfigError",
    "NotReadyError",
    "ProtocolError",
    "TrainingDivergedError",
    "UndefinedBaselineError",
    "RunAbortedError",
]
