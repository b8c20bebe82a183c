"""
Deterministic desk-scale continuous-control environments.

Each environment is a pure function of (state, action, step counter); the
only randomness is a seeded uniform perturbation of the nominal initial
state. All dynamics constants can be overridden by name.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Type, Union

import numpy as np

from .exceptions import ConfigError, DimensionError, ProtocolError


class DoneReason(Enum):
    TERMINAL = "terminal"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class EnvSpec:
    name: str
    state_dim: int
    action_dim: int
    action_low: np.ndarray
    action_high: np.ndarray
    max_steps: int
    constants: Dict[str, float] = field(default_factory=dict)


@dataclass
class StepResult:
    s_next: np.ndarray
    r: float
    done: bool
    done_reason: Optional[DoneReason] = None

    @property
    def terminal(self) -> bool:
        return self.done_reason is DoneReason.TERMINAL


class ControlEnv:
    """
    Base class: reset/step bookkeeping, action clamping, constant overrides.

    Subclasses define ``defaults`` and implement ``_nominal_state`` and
    ``_transition``. ``_transition`` returns (next internal state, reward,
    terminal flag).
    """

    name = 'base'
    state_dim = 0
    action_dim = 0
    action_bound = 1.0
    defaults: Dict[str, float] = {}

    def __init__(self, **overrides: float):
        unknown = set(overrides) - set(self.defaults)
        if unknown:
            raise ConfigError(f"unknown {self.name} constants: {sorted(unknown)}")
        self.c: Dict[str, float] = {**self.defaults, **{k: float(v) for k, v in overrides.items()}}
        self.max_steps = int(self.c['max_steps'])
        if self.max_steps < 1:
            raise ConfigError(f"max_steps must be at least 1, got {self.max_steps}")
        bound = self.c.get('action_bound', self.action_bound)
        self.action_low = np.full(self.action_dim, -bound)
        self.action_high = np.full(self.action_dim, bound)
        self._state: Optional[np.ndarray] = None
        self._steps = 0
        self._done = True

    @property
    def spec(self) -> EnvSpec:
        return EnvSpec(
            name=self.name,
            state_dim=self.state_dim,
            action_dim=self.action_dim,
            action_low=self.action_low.copy(),
            action_high=self.action_high.copy(),
            max_steps=self.max_steps,
            constants=dict(self.c),
        )

    @property
    def steps(self) -> int:
        return self._steps

    def observe(self) -> np.ndarray:
        """Current observation of an active episode."""
        if self._done or self._state is None:
            raise ProtocolError(f"{self.name}: no active episode; call reset() first")
        return self._observe(self._state)

    def _nominal_state(self) -> np.ndarray:
        raise NotImplementedError

    def _transition(self, state: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        raise NotImplementedError

    def _observe(self, state: np.ndarray) -> np.ndarray:
        return state.copy()

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        """Start an episode at the nominal state, perturbed by U(-0.05, 0.05) when seeded."""
        state = self._nominal_state()
        if seed is not None:
            state = state + np.random.default_rng(seed).uniform(-0.05, 0.05, size=state.size)
        return self.set_state(state)

    def set_state(self, state: Union[Sequence[float], np.ndarray]) -> np.ndarray:
        """Start an episode from an explicit internal state."""
        self._state = np.array(state, dtype=np.float64)
        self._steps = 0
        self._done = False
        return self._observe(self._state)

    def step(self, a: Union[Sequence[float], np.ndarray]) -> StepResult:
        if self._done or self._state is None:
            raise ProtocolError(f"{self.name}: step called on a finished episode; call reset() first")
        action = np.atleast_1d(np.asarray(a, dtype=np.float64))
        if action.shape != (self.action_dim,):
            raise DimensionError(f"{self.name} expects {self.action_dim} action dims, got {action.shape}")
        action = np.clip(action, self.action_low, self.action_high)
        self._state, reward, terminal = self._transition(self._state, action)
        self._steps += 1
        reason = None
        if terminal:
            reason = DoneReason.TERMINAL
        elif self._steps >= self.max_steps:
            reason = DoneReason.TIMEOUT
        self._done = reason is not None
        return StepResult(self._observe(self._state), float(reward), self._done, reason)


class LineWalker(ControlEnv):
    """Walker analogue: thrust builds speed, speed and balance push tilt u towards a fall."""

    name = 'linewalker'
    state_dim = 3
    action_dim = 2
    defaults = {
        'thrust_gain': 0.1,
        'drag': 0.01,
        'v_max': 2.0,
        'dt': 0.1,
        'balance_gain': 0.05,
        'speed_tilt': 0.01,
        'action_cost': 0.01,
        'fall_limit': 1.0,
        'fall_penalty': 1.0,
        'max_steps': 200,
    }

    def _nominal_state(self) -> np.ndarray:
        return np.zeros(3)

    def _transition(self, state: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        c = self.c
        p, v, u = state
        v_new = min(max(v + c['thrust_gain'] * a[0] - c['drag'] * v, -c['v_max']), c['v_max'])
        p_new = p + c['dt'] * v_new
        u_new = u + c['balance_gain'] * a[1] + c['speed_tilt'] * v_new
        reward = v_new - c['action_cost'] * float(a[0] ** 2 + a[1] ** 2)
        fell = abs(u_new) > c['fall_limit']
        if fell:
            reward -= c['fall_penalty']
        return np.array([p_new, v_new, u_new]), reward, fell


class PointGoal(ControlEnv):
    """Point mass accelerating towards a fixed goal; reward is progress."""

    name = 'pointgoal'
    state_dim = 4
    action_dim = 2
    defaults = {
        'accel_gain': 0.1,
        'v_max': 1.0,
        'dt': 0.1,
        'goal_x': 5.0,
        'goal_y': 5.0,
        'goal_radius': 0.2,
        'goal_bonus': 5.0,
        'max_steps': 150,
    }

    def _nominal_state(self) -> np.ndarray:
        return np.zeros(4)

    def _transition(self, state: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        c = self.c
        goal = np.array([c['goal_x'], c['goal_y']])
        pos, vel = state[:2], state[2:]
        vel_new = np.clip(vel + c['accel_gain'] * a, -c['v_max'], c['v_max'])
        pos_new = pos + c['dt'] * vel_new
        dist_new = float(np.linalg.norm(pos_new - goal))
        reward = float(np.linalg.norm(pos - goal)) - dist_new
        reached = dist_new < c['goal_radius']
        if reached:
            reward += c['goal_bonus']
        return np.concatenate([pos_new, vel_new]), reward, reached


def wrap_angle(theta: float) -> float:
    return ((theta + math.pi) % (2 * math.pi)) - math.pi


class Pendulum(ControlEnv):
    """Torque-limited swing-up; observed as (cos theta, sin theta, omega), upright at theta = 0."""

    name = 'pendulum'
    state_dim = 3
    action_dim = 1
    action_bound = 2.0
    defaults = {
        'gravity': 9.8,
        'gravity_scale': 1.5,
        'torque_gain': 3.0,
        'dt': 0.05,
        'omega_max': 8.0,
        'omega_cost': 0.1,
        'torque_cost': 0.001,
        'action_bound': 2.0,
        'max_steps': 200,
    }

    # Internal state is (theta, omega); the perturbation applies to both.
    def _nominal_state(self) -> np.ndarray:
        return np.array([math.pi, 0.0])

    def _observe(self, state: np.ndarray) -> np.ndarray:
        theta, omega = state
        return np.array([math.cos(theta), math.sin(theta), omega])

    def _transition(self, state: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, float, bool]:
        c = self.c
        theta, omega = state
        torque = float(a[0])
        omega_new = omega + c['dt'] * (
            -c['gravity'] * math.sin(theta + math.pi) * c['gravity_scale'] + c['torque_gain'] * torque
        )
        omega_new = min(max(omega_new, -c['omega_max']), c['omega_max'])
        theta_new = theta + c['dt'] * omega_new
        reward = -(wrap_angle(theta) ** 2 + c['omega_cost'] * omega_new ** 2 + c['torque_cost'] * torque ** 2)
        return np.array([theta_new, omega_new]), reward, False


ENV_REGISTRY: Dict[str, Type[ControlEnv]] = {
    LineWalker.name: LineWalker,
    PointGoal.name: PointGoal,
    Pendulum.name: Pendulum,
}


def make_env(name: str, params: Optional[Mapping[str, Any]] = None) -> ControlEnv:
    """Build an environment by registry name with optional constant overrides."""
    try:
        env_cls = ENV_REGISTRY[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown environment {name!r}; choose from {sorted(ENV_REGISTRY)}") from None
    return env_cls(**dict(params or {}))
