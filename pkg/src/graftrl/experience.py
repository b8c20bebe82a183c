"""
Experience data model: transitions, segments, trajectories and the
provenance-aware replay buffer used for both the EG and the Tutor agent.
"""

import csv
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union, overload

import numpy as np

from .exceptions import DimensionError, InvalidInputError, NotReadyError


class Provenance(Enum):
    AUTHENTIC = "authentic"
    SYNTHETIC = "synthetic"


@dataclass(frozen=True, eq=False)
class Transition:
    """One (s, a, r, s_next) step with its provenance tag.

    ``terminal`` marks an environment terminal (not a time-out); Bellman
    targets do not bootstrap through it.
    """
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray
    terminal: bool = False
    provenance: Provenance = Provenance.AUTHENTIC

    def __post_init__(self) -> None:
        s = np.array(self.s, dtype=np.float64)
        s_next = np.array(self.s_next, dtype=np.float64)
        a = np.atleast_1d(np.array(self.a, dtype=np.float64))
        if s.ndim != 1 or s.shape != s_next.shape:
            raise DimensionError(f"s and s_next must be vectors of equal length: {s.shape} vs {s_next.shape}")
        if not np.isfinite(self.r):
            raise InvalidInputError(f"reward must be finite, got {self.r}")
        for arr in (s, a, s_next):
            arr.setflags(write=False)
        object.__setattr__(self, 's', s)
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 's_next', s_next)
        object.__setattr__(self, 'r', float(self.r))

    @property
    def is_synthetic(self) -> bool:
        return self.provenance is Provenance.SYNTHETIC

    def as_synthetic(self) -> "Transition":
        if self.is_synthetic:
            return self
        return replace(self, provenance=Provenance.SYNTHETIC)

    def fingerprint(self) -> Tuple[bytes, bytes, float, bytes, bool]:
        """Field-for-field identity of the step, provenance aside."""
        return (self.s.tobytes(), self.a.tobytes(), self.r, self.s_next.tobytes(), self.terminal)


class Segment(Sequence[Transition]):
    """A non-empty ordered run of transitions."""

    def __init__(self, transitions: Iterable[Transition]):
        self._transitions: Tuple[Transition, ...] = tuple(transitions)
        if not self._transitions:
            raise InvalidInputError("a segment holds at least one transition")

    def __len__(self) -> int:
        return len(self._transitions)

    def __iter__(self) -> Iterator[Transition]:
        return iter(self._transitions)

    @overload
    def __getitem__(self, index: int) -> Transition: ...

    @overload
    def __getitem__(self, index: slice) -> "Segment": ...

    def __getitem__(self, index: Union[int, slice]) -> Union[Transition, "Segment"]:
        if isinstance(index, slice):
            return Segment(self._transitions[index])
        return self._transitions[index]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(len={len(self)}, quality={quality(self):.4g})"

    @property
    def transitions(self) -> Tuple[Transition, ...]:
        return self._transitions

    @property
    def init_state(self) -> np.ndarray:
        return self._transitions[0].s

    @property
    def term_state(self) -> np.ndarray:
        return self._transitions[-1].s_next

    @property
    def state_dim(self) -> int:
        return int(self._transitions[0].s.size)

    def fingerprint(self) -> Tuple[Tuple[bytes, bytes, float, bytes, bool], ...]:
        return tuple(t.fingerprint() for t in self._transitions)


class Trajectory(Segment):
    """A segment spanning one episode, from an initial state onwards.

    ``is_complete_episode`` is set when the last transition reached an
    environment terminal; episodes cut off by a time limit leave it unset.
    """

    def __init__(self, transitions: Iterable[Transition], is_complete_episode: bool = True):
        super().__init__(transitions)
        self.is_complete_episode = is_complete_episode

    @property
    def is_authentic(self) -> bool:
        return all(not t.is_synthetic for t in self)


def quality(seg: Iterable[Transition]) -> float:
    """Performance quality: undiscounted reward sum."""
    rewards = [t.r for t in seg]
    if not rewards:
        raise InvalidInputError("quality of an empty segment is undefined")
    return float(sum(rewards))


class ReplayBuffer:
    """
    Bounded FIFO ring of transitions with uniform sampling.

    Tracks how many stored transitions are synthetic so the Tutor can read
    the ratio in O(1), and supports bulk removal of all synthetic ones.

    Args:
        capacity: maximum number of stored transitions
        warmup: minimum fill before ``sample_minibatch`` is allowed
    """

    def __init__(self, capacity: int = 100_000, warmup: int = 1_000):
        if capacity < 1:
            raise InvalidInputError(f"capacity must be positive, got {capacity}")
        if warmup < 1:
            raise InvalidInputError(f"warmup must be positive, got {warmup}")
        self.capacity = capacity
        self.warmup = warmup
        self._memory: List[Transition] = []
        self._next_index = 0
        self._synthetic_count = 0

    def __len__(self) -> int:
        return len(self._memory)

    @property
    def synthetic_count(self) -> int:
        return self._synthetic_count

    @property
    def authentic_count(self) -> int:
        return len(self._memory) - self._synthetic_count

    @property
    def is_ready(self) -> bool:
        return len(self._memory) >= self.warmup

    def push(self, t: Transition) -> None:
        if self._next_index >= len(self._memory):
            self._memory.append(t)
        else:
            if self._memory[self._next_index].is_synthetic:
                self._synthetic_count -= 1
            self._memory[self._next_index] = t
        if t.is_synthetic:
            self._synthetic_count += 1
        self._next_index = (self._next_index + 1) % self.capacity

    def extend(self, transitions: Iterable[Transition]) -> int:
        count = 0
        for t in transitions:
            self.push(t)
            count += 1
        return count

    def sample_minibatch(self, n: int, rng: np.random.Generator) -> List[Transition]:
        """Draw ``n`` transitions uniformly with replacement."""
        if n < 0:
            raise InvalidInputError(f"minibatch size must be non-negative, got {n}")
        if n == 0:
            return []
        if not self.is_ready:
            raise NotReadyError(f"buffer holds {len(self._memory)} < warmup {self.warmup}")
        indices = rng.integers(0, len(self._memory), size=n)
        return [self._memory[i] for i in indices]

    def remove_synthetic(self) -> int:
        """Drop every synthetic transition, keeping authentic ones in order."""
        if self._synthetic_count == 0:
            return 0
        kept = [t for t in self.transitions() if not t.is_synthetic]
        removed = len(self._memory) - len(kept)
        self._memory = kept
        self._next_index = len(kept) % self.capacity
        self._synthetic_count = 0
        return removed

    def synthetic_ratio(self) -> float:
        if not self._memory:
            return 0.0
        return self._synthetic_count / len(self._memory)

    def transitions(self) -> List[Transition]:
        """Stored transitions, oldest first."""
        if len(self._memory) < self.capacity:
            return list(self._memory)
        return self._memory[self._next_index:] + self._memory[:self._next_index]


TRAJECTORY_CSV_HEADER = ['episode_id', 'step', 's', 'a', 'r', 's_next', 'provenance']


def _vector_field(v: np.ndarray) -> str:
    return ' '.join(repr(float(x)) for x in v)


def write_trajectories_csv(
    path: str,
    episodes: Iterable[Tuple[int, Segment]],
    append: bool = False,
) -> int:
    """Dump trajectories one transition per row.

    Columns are ``episode_id,step,s,a,r,s_next,provenance``; vector fields
    hold space-separated components. Returns the number of rows written.
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    write_header = not (append and os.path.exists(path))
    rows = 0
    with open(path, 'a' if append else 'w', newline='') as f:
        writer = csv.writer(f)
        if write_header:
            writer.writerow(TRAJECTORY_CSV_HEADER)
        for episode_id, seg in episodes:
            for step, t in enumerate(seg):
                writer.writerow([
                    episode_id, step, _vector_field(t.s), _vector_field(t.a),
                    repr(t.r), _vector_field(t.s_next), t.provenance.value,
                ])
                rows += 1
    return rows


def read_trajectories_csv(path: str) -> List[Tuple[int, Trajectory]]:
    """Inverse of ``write_trajectories_csv``; terminal flags are not stored."""
    grouped: List[Tuple[int, List[Transition]]] = []
    current: Optional[int] = None
    with open(path, newline='') as f:
        for row in csv.DictReader(f):
            episode_id = int(row['episode_id'])
            if episode_id != current:
                grouped.append((episode_id, []))
                current = episode_id
            grouped[-1][1].append(Transition(
                s=np.array(row['s'].split(), dtype=np.float64),
                a=np.array(row['a'].split(), dtype=np.float64),
                r=float(row['r']),
                s_next=np.array(row['s_next'].split(), dtype=np.float64),
                provenance=Provenance(row['provenance']),
            ))
    return [(episode_id, Trajectory(ts)) for episode_id, ts in grouped]
