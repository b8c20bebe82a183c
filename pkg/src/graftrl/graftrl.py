"""
graftrl - Main module with the configuration object and convenience functions.

The core functionality is split across:

- distance.py: state normalization and the 1-Wasserstein state distance
- experience.py: transitions, segments, trajectories, replay buffer
- library.py: grid-indexed segment library
- grafting.py: error/union/grafting functions and the grafting algorithm
- networks.py, ddpg.py: numpy actor-critic used by the EG and Tutor agents
- envs.py: LineWalker, PointGoal and Pendulum
- manager.py: TrainingManager and the noeg / eg / autoeg loops
- experiment.py, metrics.py: multi-seed experiments, AUC and policy quality
- cli.py: Command-line interface

API Levels:
1. Simple Functions: autoeg_train(), eg_train(), noeg_train()
2. Config Object: every tunable in one flat dataclass
3. TrainingManager: full control, hooks, access to agents and buffers

Example:
    # Simple usage
    log = autoeg_train(Config(), 'linewalker', episodes=200, seed=1)

    # Config-based customization
    config = Config(horizon=5, theta=3, hidden_sizes=(32, 32))
    log = eg_train(config, 'pendulum', episodes=100, fixed_eps=0.5, seed=2)

    # Full control
    manager = config.create_manager('linewalker', seed=3, mode='autoeg')
    log = manager.train(100)
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

from .ddpg import DdpgConfig
from .envs import ControlEnv, make_env
from .exceptions import ConfigError
from .grafting import GraftConfig, GraftStats, SyntheticTrajectory
from .manager import TrainingManager
from .runlog import EpisodeRecord, RunLog

EnvLike = Union[str, ControlEnv]


@dataclass
class Config:
    """Configuration for one training run; every field is a flat config key."""
    # Replay
    buffer_capacity: int = 100_000
    warmup: int = 1_000
    batch_size: int = 16
    tutor_buffer_capacity: int = 100_000
    tutor_warmup: int = 100
    tutor_batch_size: int = 10

    # EG agent
    hidden_sizes: Tuple[int, ...] = (64, 64)
    gamma: float = 0.99
    tau: float = 0.001
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    ou_theta: float = 0.15
    ou_sigma: float = 0.2

    # Tutor agent
    tutor_hidden_sizes: Tuple[int, ...] = (64, 64)
    tutor_gamma: float = 0.9
    tutor_tau: float = 0.001
    tutor_actor_lr: float = 1e-4
    tutor_critic_lr: float = 1e-3
    tutor_noise_start: float = 0.1
    tutor_noise_end: float = 0.01
    tutor_noise_decay_fraction: float = 0.5
    tutor_eps_low: float = 0.0
    tutor_eps_high: float = 1.0
    horizon: int = 10

    # Grafting
    n_ext: int = 10
    n_gft: int = 10
    theta: int = 5
    bin_size: float = 1.0
    bin_capacity: int = 1000

    # Environment constant overrides, e.g. {'max_steps': 100}
    env_params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.hidden_sizes = tuple(int(n) for n in self.hidden_sizes)
        self.tutor_hidden_sizes = tuple(int(n) for n in self.tutor_hidden_sizes)
        self.env_params = dict(self.env_params)

    def validate(self) -> None:
        """Raise ConfigError on the first out-of-range value."""
        positive = ('buffer_capacity', 'warmup', 'batch_size', 'tutor_buffer_capacity',
                    'tutor_warmup', 'tutor_batch_size', 'horizon', 'bin_capacity')
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ('n_ext', 'n_gft', 'theta'):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not self.bin_size > 0:
            raise ConfigError(f"bin_size must be positive, got {self.bin_size}")
        if not 0.0 <= self.tutor_eps_low <= self.tutor_eps_high:
            raise ConfigError(
                f"need 0 <= tutor_eps_low <= tutor_eps_high, got {self.tutor_eps_low}, {self.tutor_eps_high}"
            )
        if self.tutor_noise_start < 0 or self.tutor_noise_end < 0:
            raise ConfigError("tutor noise levels must be non-negative")
        if self.tutor_noise_decay_fraction < 0:
            raise ConfigError("tutor_noise_decay_fraction must be non-negative")
        self.eg_ddpg_config()
        self.tutor_ddpg_config()

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "Config":
        """Build a config from flat keys; unknown keys are an error."""
        unknown = set(values) - set(cls.field_names())
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            config = cls(**dict(values))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid config: {e}") from e
        config.validate()
        return config

    def to_dict(self) -> Dict[str, Any]:
        out = dataclasses.asdict(self)
        out['hidden_sizes'] = list(self.hidden_sizes)
        out['tutor_hidden_sizes'] = list(self.tutor_hidden_sizes)
        return out

    def eg_ddpg_config(self) -> DdpgConfig:
        return DdpgConfig(
            hidden_sizes=self.hidden_sizes, gamma=self.gamma, tau=self.tau,
            actor_lr=self.actor_lr, critic_lr=self.critic_lr,
            ou_theta=self.ou_theta, ou_sigma=self.ou_sigma,
        )

    def tutor_ddpg_config(self) -> DdpgConfig:
        return DdpgConfig(
            hidden_sizes=self.tutor_hidden_sizes, gamma=self.tutor_gamma, tau=self.tutor_tau,
            actor_lr=self.tutor_actor_lr, critic_lr=self.tutor_critic_lr,
        )

    def graft_config(self, eps: float) -> GraftConfig:
        return GraftConfig(eps=eps, n_ext=self.n_ext, n_gft=self.n_gft, theta=self.theta)

    def make_env(self, env: EnvLike) -> ControlEnv:
        if isinstance(env, ControlEnv):
            return env
        return make_env(env, self.env_params)

    def create_manager(
        self,
        env: EnvLike,
        seed: int,
        mode: str = 'autoeg',
        fixed_eps: Optional[float] = None,
        logger: Optional[logging.Logger] = None,
        episode_hook: Optional[Callable[[EpisodeRecord, TrainingManager], None]] = None,
        graft_hook: Optional[Callable[[List[SyntheticTrajectory], GraftStats], None]] = None,
    ) -> TrainingManager:
        """Create a TrainingManager with this configuration."""
        return TrainingManager(
            self, self.make_env(env), seed, mode=mode, fixed_eps=fixed_eps,
            logger=logger, episode_hook=episode_hook, graft_hook=graft_hook,
        )


def autoeg_train(
    config: Config,
    env: EnvLike,
    episodes: int,
    seed: int,
    logger: Optional[logging.Logger] = None,
) -> RunLog:
    """Train with the Tutor choosing the grafting threshold after every episode."""
    return config.create_manager(env, seed, mode='autoeg', logger=logger).train(episodes)


def eg_train(
    config: Config,
    env: EnvLike,
    episodes: int,
    fixed_eps: float,
    seed: int,
    logger: Optional[logging.Logger] = None,
) -> RunLog:
    """Train with grafting at a constant threshold; synthetic data is never purged."""
    return config.create_manager(env, seed, mode='eg', fixed_eps=fixed_eps, logger=logger).train(episodes)


def noeg_train(
    config: Config,
    env: EnvLike,
    episodes: int,
    seed: int,
    logger: Optional[logging.Logger] = None,
) -> RunLog:
    """Plain DDPG baseline."""
    return config.create_manager(env, seed, mode='noeg', logger=logger).train(episodes)
