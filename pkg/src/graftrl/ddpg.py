"""
Compact DDPG shared by the EG agent and the Tutor agent.

Actor and critic are numpy MLPs (see ``networks``); the actor's tanh output
is mapped affinely onto the action box, the critic reads the concatenation
(s, a). Each ``train_step`` takes one Adam step on the critic's squared
Bellman error, one Adam step ascending the critic's value of the actor's
actions, then soft-updates both target networks.
"""

import os
import struct
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .exceptions import ConfigError, DimensionError, InvalidInputError, TrainingDivergedError
from .experience import Transition
from .networks import Adam, Mlp

CHECKPOINT_MAGIC = b"GRFT"
CHECKPOINT_VERSION = 1


@dataclass
class DdpgConfig:
    hidden_sizes: Tuple[int, ...] = (64, 64)
    gamma: float = 0.99
    tau: float = 0.001
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    final_init: float = 3e-3

    def __post_init__(self) -> None:
        self.hidden_sizes = tuple(int(n) for n in self.hidden_sizes)
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if any(n < 1 for n in self.hidden_sizes):
            raise ConfigError(f"hidden sizes must be positive, got {self.hidden_sizes}")


class OrnsteinUhlenbeckNoise:
    """Temporally correlated exploration noise, x += theta (mu - x) + sigma N(0, 1)."""

    def __init__(
        self,
        action_dim: int,
        rng: np.random.Generator,
        mu: float = 0.0,
        theta: float = 0.15,
        sigma: float = 0.2,
    ):
        self.action_dim = action_dim
        self.rng = rng
        self.mu = mu
        self.theta = theta
        self.sigma = sigma
        self.reset()

    def reset(self) -> None:
        self.state = np.full(self.action_dim, self.mu, dtype=np.float64)

    def sample(self) -> np.ndarray:
        dx = self.theta * (self.mu - self.state) + self.sigma * self.rng.standard_normal(self.action_dim)
        self.state = self.state + dx
        return self.state.copy()


class GaussianNoise:
    """Uncorrelated N(0, sigma^2) noise; ``sigma`` may be changed between samples."""

    def __init__(self, action_dim: int, rng: np.random.Generator, sigma: float = 0.1):
        self.action_dim = action_dim
        self.rng = rng
        self.sigma = sigma

    def reset(self) -> None:
        pass

    def sample(self) -> np.ndarray:
        return self.sigma * self.rng.standard_normal(self.action_dim)


class DdpgAgent:
    """
    Deterministic actor-critic with target networks.

    Args:
        state_dim: observation width
        action_dim: action width
        action_low: lower action bound, scalar or per dimension
        action_high: upper action bound, scalar or per dimension
        config: network sizes and learning hyperparameters
        rng: generator for weight initialization
        noise: exploration process used by ``act(explore=True)``
    """

    def __init__(
        self,
        state_dim: int,
        action_dim: int,
        action_low: Union[float, Sequence[float]] = -1.0,
        action_high: Union[float, Sequence[float]] = 1.0,
        config: Optional[DdpgConfig] = None,
        rng: Optional[np.random.Generator] = None,
        noise: Optional[Union[OrnsteinUhlenbeckNoise, GaussianNoise]] = None,
    ):
        self.config = config or DdpgConfig()
        rng = rng if rng is not None else np.random.default_rng()
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self.action_low = np.broadcast_to(np.asarray(action_low, dtype=np.float64), (self.action_dim,)).copy()
        self.action_high = np.broadcast_to(np.asarray(action_high, dtype=np.float64), (self.action_dim,)).copy()
        if np.any(self.action_high < self.action_low):
            raise InvalidInputError("action_high must not be below action_low")
        self._center = (self.action_high + self.action_low) / 2.0
        self._half_range = (self.action_high - self.action_low) / 2.0

        hidden = list(self.config.hidden_sizes)
        self.actor = Mlp([self.state_dim, *hidden, self.action_dim], 'tanh', rng, self.config.final_init)
        self.critic = Mlp([self.state_dim + self.action_dim, *hidden, 1], 'identity', rng, self.config.final_init)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.actor_optimizer = Adam(self.actor.params, lr=self.config.actor_lr)
        self.critic_optimizer = Adam(self.critic.params, lr=self.config.critic_lr)
        self.noise = noise if noise is not None else OrnsteinUhlenbeckNoise(
            self.action_dim, np.random.default_rng(rng.integers(2**62)),
            theta=self.config.ou_theta, sigma=self.config.ou_sigma,
        )
        self.train_steps = 0

    def _scale(self, out: np.ndarray) -> np.ndarray:
        return self._center + self._half_range * out

    def actor_output(self, s: np.ndarray) -> np.ndarray:
        """Raw tanh output of the actor for a single state."""
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (self.state_dim,):
            raise DimensionError(f"expected state of size {self.state_dim}, got shape {s.shape}")
        return self.actor.predict(s)[0]

    def act(self, s: np.ndarray, explore: bool = False) -> np.ndarray:
        """Greedy action, plus clamped exploration noise when ``explore``."""
        action = self._scale(self.actor_output(s))
        if explore:
            action = action + self.noise.sample()
        return np.clip(action, self.action_low, self.action_high)

    def reset_noise(self) -> None:
        self.noise.reset()

    @staticmethod
    def _stack(batch: Sequence[Transition]) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        s = np.stack([t.s for t in batch])
        a = np.stack([t.a for t in batch])
        r = np.array([t.r for t in batch], dtype=np.float64)
        s_next = np.stack([t.s_next for t in batch])
        terminal = np.array([t.terminal for t in batch], dtype=bool)
        return s, a, r, s_next, terminal

    def critic_targets(self, batch: Sequence[Transition]) -> np.ndarray:
        """y = r + gamma * Q'(s', mu'(s')), or y = r on terminal transitions."""
        if not batch:
            raise InvalidInputError("critic targets need a non-empty batch")
        _, _, r, s_next, terminal = self._stack(batch)
        next_actions = self._scale(self.target_actor.predict(s_next))
        next_q = self.target_critic.predict(np.concatenate([s_next, next_actions], axis=1))[:, 0]
        return r + self.config.gamma * np.where(terminal, 0.0, next_q)

    def critic_loss_and_grads(
        self, s: np.ndarray, a: np.ndarray, targets: np.ndarray
    ) -> Tuple[float, List[np.ndarray]]:
        """Mean squared Bellman error and its gradient w.r.t. critic params."""
        q, cache = self.critic.forward(np.concatenate([s, a], axis=1))
        err = q[:, 0] - targets
        loss = float(np.mean(err ** 2))
        grad_q = (2.0 / len(err)) * err[:, None]
        grads, _ = self.critic.backward(cache, grad_q)
        return loss, grads

    def actor_objective_and_grads(self, s: np.ndarray) -> Tuple[float, List[np.ndarray]]:
        """Mean critic value of the actor's actions and its gradient w.r.t. actor params."""
        out, actor_cache = self.actor.forward(s)
        actions = self._scale(out)
        q, critic_cache = self.critic.forward(np.concatenate([s, actions], axis=1))
        objective = float(np.mean(q))
        _, grad_in = self.critic.backward(critic_cache, np.full_like(q, 1.0 / len(q)))
        grad_out = grad_in[:, self.state_dim:] * self._half_range
        grads, _ = self.actor.backward(actor_cache, grad_out)
        return objective, grads

    def train_step(self, batch: Sequence[Transition]) -> Tuple[float, float]:
        """One critic step, one actor step, then a soft target update."""
        targets = self.critic_targets(batch)
        s, a, _, _, _ = self._stack(batch)

        critic_loss, critic_grads = self.critic_loss_and_grads(s, a, targets)
        if not np.isfinite(critic_loss):
            raise TrainingDivergedError(
                f"critic loss became non-finite after {self.train_steps} steps",
                {'critic_loss': critic_loss, 'train_steps': self.train_steps,
                 'target_range': (float(np.min(targets)), float(np.max(targets)))},
            )
        self.critic_optimizer.step(critic_grads)

        actor_objective, actor_grads = self.actor_objective_and_grads(s)
        if not np.isfinite(actor_objective):
            raise TrainingDivergedError(
                f"actor objective became non-finite after {self.train_steps} steps",
                {'actor_objective': actor_objective, 'train_steps': self.train_steps},
            )
        self.actor_optimizer.step([-g for g in actor_grads])

        self.soft_update()
        self.train_steps += 1
        return critic_loss, actor_objective

    def soft_update(self, tau: Optional[float] = None) -> None:
        tau = self.config.tau if tau is None else tau
        if not 0.0 <= tau <= 1.0:
            raise InvalidInputError(f"tau must lie in [0, 1], got {tau}")
        self.target_actor.soft_update_from(self.actor, tau)
        self.target_critic.soft_update_from(self.critic, tau)

    def networks(self) -> List[Mlp]:
        return [self.actor, self.critic, self.target_actor, self.target_critic]

    def save_checkpoint(self, path: str) -> None:
        """Write all four networks in the flat little-endian checkpoint layout.

        Layout: magic ``GRFT``, uint32 version, uint32 tensor count, then per
        tensor a uint32 ndim followed by its uint32 dims, then every tensor as
        row-major float64, in the order actor, critic, target actor, target
        critic (weight then bias per layer).
        """
        tensors = [p for net in self.networks() for p in net.params]
        header = bytearray(CHECKPOINT_MAGIC)
        header += struct.pack('<II', CHECKPOINT_VERSION, len(tensors))
        for t in tensors:
            header += struct.pack('<I', t.ndim)
            header += struct.pack(f'<{t.ndim}I', *t.shape)
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'wb') as f:
            f.write(bytes(header))
            for t in tensors:
                f.write(np.ascontiguousarray(t, dtype='<f8').tobytes())

    def load_checkpoint(self, path: str) -> None:
        with open(path, 'rb') as f:
            data = f.read()
        if data[:4] != CHECKPOINT_MAGIC:
            raise InvalidInputError(f"{path} is not a graftrl checkpoint")
        version, count = struct.unpack_from('<II', data, 4)
        if version != CHECKPOINT_VERSION:
            raise InvalidInputError(f"unsupported checkpoint version {version}")
        offset = 12
        shapes = []
        for _ in range(count):
            (ndim,) = struct.unpack_from('<I', data, offset)
            offset += 4
            shapes.append(struct.unpack_from(f'<{ndim}I', data, offset))
            offset += 4 * ndim
        tensors = []
        for shape in shapes:
            size = int(np.prod(shape))
            tensors.append(np.frombuffer(data, dtype='<f8', count=size, offset=offset).reshape(shape))
            offset += 8 * size
        start = 0
        for net in self.networks():
            n = len(net.params)
            net.load_params(tensors[start:start + n])
            start += n
        if start != count:
            raise DimensionError(f"checkpoint holds {count} tensors, agent has {start}")
