"""
Training Manager - the EG agent's episode loop, grafting, and the Tutor.

One ``TrainingManager`` owns one seeded run: an environment, the EG agent
with its replay buffer, the segment library and, in ``autoeg`` mode, the
Tutor agent with its own replay buffer. Three modes share the loop:

- ``noeg``: plain DDPG, no grafting
- ``eg``: grafting after every episode with a fixed threshold
- ``autoeg``: grafting with the threshold chosen by the Tutor, whose
  reward is the EG agent's mean episode return over a horizon of H
  episodes; all synthetic transitions are purged at each horizon boundary
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from .ddpg import DdpgAgent, GaussianNoise, OrnsteinUhlenbeckNoise
from .envs import ControlEnv
from .exceptions import ConfigError, NotReadyError, TrainingDivergedError
from .experience import ReplayBuffer, Trajectory, Transition
from .grafting import GraftStats, SyntheticTrajectory, graft_with_stats
from .library import SegmentLibrary
from .runlog import EpisodeRecord, RunLog
from .utils import default_logger, spawn_streams

if TYPE_CHECKING:
    from .graftrl import Config

MODES = ('noeg', 'eg', 'autoeg')


class TutorObservation(NamedTuple):
    """The Tutor's whole view of the world; it never sees environment states."""
    r_trs: float
    r_trj: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r_trs, self.r_trj], dtype=np.float64)


INITIAL_TUTOR_OBSERVATION = TutorObservation(0.0, 0.0)


@dataclass
class TutorEpisodeState:
    horizon_counter: int = 0
    sum_of_reward: float = 0.0

    def reset(self) -> None:
        self.horizon_counter = 0
        self.sum_of_reward = 0.0


def tutor_action(
    tutor: DdpgAgent,
    obs: TutorObservation,
    explore: bool = False,
    eps_low: float = 0.0,
    eps_high: float = 1.0,
) -> Tuple[float, float]:
    """Return (action in [-1, 1], grafting threshold in [eps_low, eps_high])."""
    raw = float(tutor.act(obs.as_array(), explore=explore)[0])
    eps = eps_low + (raw + 1.0) / 2.0 * (eps_high - eps_low)
    return raw, eps


def tutor_select_epsilon(
    tutor: DdpgAgent,
    obs: TutorObservation,
    explore: bool = False,
    eps_low: float = 0.0,
    eps_high: float = 1.0,
) -> float:
    """Grafting threshold chosen by the Tutor for its current observation.

    Exploration noise comes from the Tutor's own noise process and is added
    before the [-1, 1] -> [eps_low, eps_high] mapping.
    """
    return tutor_action(tutor, obs, explore, eps_low, eps_high)[1]


def run_eg_episode(
    eg: DdpgAgent,
    env: ControlEnv,
    buffer: ReplayBuffer,
    rng: np.random.Generator,
    batch_size: int = 16,
    explore: bool = True,
) -> Tuple[Trajectory, float]:
    """Play one episode from the env's current (freshly reset) state.

    Every step is stored as authentic and followed by one training step on
    a minibatch, skipped while the buffer is below warmup.
    """
    s = env.observe()
    eg.reset_noise()
    transitions: List[Transition] = []
    episode_return = 0.0
    while True:
        a = eg.act(s, explore=explore)
        result = env.step(a)
        t = Transition(s, a, result.r, result.s_next, terminal=result.terminal)
        buffer.push(t)
        transitions.append(t)
        episode_return += result.r
        try:
            batch = buffer.sample_minibatch(batch_size, rng)
        except NotReadyError:
            batch = []
        if batch:
            eg.train_step(batch)
        s = result.s_next
        if result.done:
            break
    return Trajectory(transitions, is_complete_episode=result.terminal), episode_return


class TrainingManager:
    """
    Runs one seeded training run in ``noeg``, ``eg`` or ``autoeg`` mode.

    Args:
        config: training configuration (``graftrl.Config``)
        env: environment instance owned by this run
        seed: run seed; every random stream is derived from it
        mode: 'noeg', 'eg' or 'autoeg'
        fixed_eps: grafting threshold for 'eg' mode
        logger: Logger instance to use (default: package logger)
        episode_hook: optional callback called after every episode
        graft_hook: optional callback called after every graft call
    """

    def __init__(
        self,
        config: "Config",
        env: ControlEnv,
        seed: int,
        mode: str = 'autoeg',
        fixed_eps: Optional[float] = None,
        logger: Optional[logging.Logger] = None,
        episode_hook: Optional[Callable[[EpisodeRecord, "TrainingManager"], None]] = None,
        graft_hook: Optional[Callable[[List[SyntheticTrajectory], GraftStats], None]] = None,
    ):
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}; choose from {MODES}")
        if mode == 'eg' and fixed_eps is None:
            raise ConfigError("eg mode needs a fixed grafting threshold")
        if fixed_eps is not None and fixed_eps < 0:
            raise ConfigError(f"grafting threshold must be non-negative, got {fixed_eps}")
        config.validate()
        self.config = config
        self.env = env
        self.seed = seed
        self.mode = mode
        self.fixed_eps = fixed_eps
        self.logger = logger or default_logger
        self.episode_hook = episode_hook
        self.graft_hook = graft_hook

        self.streams = spawn_streams(seed)
        spec = env.spec
        self.eg = DdpgAgent(
            spec.state_dim, spec.action_dim, spec.action_low, spec.action_high,
            config.eg_ddpg_config(), rng=self.streams['init'],
            noise=OrnsteinUhlenbeckNoise(
                spec.action_dim, self.streams['explore'],
                theta=config.ou_theta, sigma=config.ou_sigma,
            ),
        )
        self.buffer = ReplayBuffer(config.buffer_capacity, config.warmup)
        self.library = SegmentLibrary(config.bin_size, config.bin_capacity, self.logger)

        self.tutor: Optional[DdpgAgent] = None
        self.tutor_buffer: Optional[ReplayBuffer] = None
        if mode == 'autoeg':
            self.tutor = DdpgAgent(
                2, 1, -1.0, 1.0, config.tutor_ddpg_config(), rng=self.streams['init'],
                noise=GaussianNoise(1, self.streams['tutor'], sigma=config.tutor_noise_start),
            )
            self.tutor_buffer = ReplayBuffer(config.tutor_buffer_capacity, config.tutor_warmup)
        self.tutor_obs = INITIAL_TUTOR_OBSERVATION
        self.tutor_state = TutorEpisodeState()
        self.episodes_done = 0

    def tutor_noise_sigma(self, episode_index: int, total_episodes: int) -> float:
        """Linear decay from start to end over the first part of training."""
        cfg = self.config
        span = cfg.tutor_noise_decay_fraction * total_episodes
        progress = 1.0 if span <= 0 else min(1.0, episode_index / span)
        return cfg.tutor_noise_start + (cfg.tutor_noise_end - cfg.tutor_noise_start) * progress

    def run_episode(self) -> Tuple[Trajectory, float]:
        """Reset the env with a seed from the env stream and play one EG episode."""
        self.env.reset(int(self.streams['env'].integers(2**31)))
        return run_eg_episode(
            self.eg, self.env, self.buffer, self.streams['sample'], self.config.batch_size,
        )

    def train(self, episodes: int) -> RunLog:
        """Run ``episodes`` EG episodes and return their records."""
        if episodes < 1:
            raise ConfigError(f"episodes must be positive, got {episodes}")
        run_log = RunLog(self.mode, self.env.name, self.seed)
        self.logger.info(
            f"Starting {self.mode} run on {self.env.name} (seed {self.seed}, {episodes} episodes)"
        )
        try:
            for index in range(episodes):
                record = self._train_episode(index, episodes)
                run_log.append(record)
                self._call_hook(self.episode_hook, record, self)
        except TrainingDivergedError as e:
            run_log.aborted = str(e)
            e.run_log = run_log
            self.logger.error(
                f"Run {self.mode}/{self.env.name}/seed {self.seed} aborted after "
                f"{len(run_log)} episodes: {e} {e.diagnostics}", exc_info=True
            )
            raise
        self.logger.info(
            f"Finished {self.mode} run on {self.env.name} (seed {self.seed}): "
            f"last return {run_log.returns()[-1]:.3f}"
        )
        return run_log

    def _train_episode(self, index: int, total: int) -> EpisodeRecord:
        trajectory, episode_return = self.run_episode()
        self.episodes_done += 1
        record = EpisodeRecord(
            episode=self.episodes_done,
            episode_return=episode_return,
            steps=len(trajectory),
        )
        if self.mode == 'noeg':
            record.synth_ratio = self.buffer.synthetic_ratio()
            self.logger.debug(f"Episode {record.episode}: return {episode_return:.3f}")
            return record

        tutor_raw = 0.0
        if self.mode == 'autoeg':
            assert self.tutor is not None
            self.tutor_state.sum_of_reward += episode_return
            self.tutor.noise.sigma = self.tutor_noise_sigma(index, total)
            tutor_raw, eps = tutor_action(
                self.tutor, self.tutor_obs, explore=True,
                eps_low=self.config.tutor_eps_low, eps_high=self.config.tutor_eps_high,
            )
        else:
            assert self.fixed_eps is not None
            eps = self.fixed_eps

        synthetic, stats = graft_with_stats(
            self.config.graft_config(eps), trajectory, self.library, self.streams['graft'], self.logger,
        )
        self._call_hook(self.graft_hook, synthetic, stats)
        stored = self._store_synthetic(synthetic)
        record.epsilon_used = eps
        record.n_synth_generated = len(synthetic)
        record.n_synth_stored = stored

        if self.mode == 'autoeg':
            record.tutor_reward = self._tutor_step(tutor_raw, len(synthetic))
        record.synth_ratio = self.buffer.synthetic_ratio()
        self.logger.debug(
            f"Episode {record.episode}: return {episode_return:.3f}, eps {eps:.3f}, "
            f"{len(synthetic)} synthetic trajectories ({stored} transitions)"
        )
        return record

    def _store_synthetic(self, synthetic: List[SyntheticTrajectory]) -> int:
        """Push each synthetic trajectory, then take one training step for it."""
        stored = 0
        for syn in synthetic:
            stored += self.buffer.extend(syn.transitions)
            try:
                batch = self.buffer.sample_minibatch(self.config.batch_size, self.streams['sample'])
            except NotReadyError:
                continue
            self.eg.train_step(batch)
        return stored

    def _tutor_step(self, action: float, n_synthetic: int) -> Optional[float]:
        """Store one Tutor transition and update the Tutor.

        Returns the emitted reward on horizon boundaries, None otherwise.
        """
        assert self.tutor is not None and self.tutor_buffer is not None
        theta = self.config.theta
        next_obs = TutorObservation(
            self.buffer.synthetic_ratio(),
            n_synthetic / theta if theta > 0 else 0.0,
        )
        state = self.tutor_state
        state.horizon_counter += 1
        emitted: Optional[float] = None
        if state.horizon_counter < self.config.horizon:
            self.tutor_buffer.push(Transition(self.tutor_obs.as_array(), [action], 0.0, next_obs.as_array()))
            self.tutor_obs = next_obs
        else:
            emitted = state.sum_of_reward / self.config.horizon
            self.tutor_buffer.push(Transition(
                self.tutor_obs.as_array(), [action], emitted, next_obs.as_array(), terminal=True,
            ))
            removed = self.buffer.remove_synthetic()
            self.logger.info(
                f"Horizon boundary after episode {self.episodes_done}: tutor reward "
                f"{emitted:.3f}, removed {removed} synthetic transitions"
            )
            self.tutor_obs = INITIAL_TUTOR_OBSERVATION
            state.reset()

        try:
            batch = self.tutor_buffer.sample_minibatch(self.config.tutor_batch_size, self.streams['tutor'])
        except NotReadyError:
            batch = []
        if batch:
            self.tutor.train_step(batch)
        return emitted

    def _call_hook(self, hook: Optional[Callable[..., None]], *args: object) -> None:
        if hook is None:
            return
        try:
            hook(*args)
        except Exception as e:
            self.logger.warning(f"Hook {getattr(hook, '__name__', hook)!r} failed: {e}")
