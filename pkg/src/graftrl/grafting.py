"""
Experience grafting.

Given one authentic trajectory T and the segment library, grafting first
extracts random tail segments of T into the library, then picks random
positions q in T, looks up library tails whose key state is within eps of
s_{q+1}, and splices T[0..q] (inclusive) onto each of them. Only splices
whose performance quality is at least that of T survive, best first,
capped at theta.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Set, Tuple

import numpy as np

from .distance import state_distance
from .exceptions import ConfigError, DimensionError, InvalidInputError
from .experience import Segment, Trajectory, quality
from .library import SegmentLibrary
from .utils import default_logger


@dataclass
class GraftConfig:
    """Grafting threshold and sampling budget for one ``graft`` call."""
    eps: float = 0.5
    n_ext: int = 10
    n_gft: int = 10
    theta: int = 5

    def __post_init__(self) -> None:
        if self.eps < 0:
            raise ConfigError(f"eps must be non-negative, got {self.eps}")
        for name in ('n_ext', 'n_gft', 'theta'):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")


@dataclass(frozen=True, eq=False)
class SyntheticTrajectory:
    head: Segment
    tail: Segment
    junction_error: float
    quality: float

    def __len__(self) -> int:
        return len(self.head) + len(self.tail)

    @property
    def transitions(self) -> Tuple:
        return self.head.transitions + self.tail.transitions

    def as_segment(self) -> Segment:
        return Segment(self.transitions)


@dataclass
class GraftStats:
    """Per-call counters surfaced to the run log."""
    extracted: int = 0
    candidates_found: int = 0
    candidates_qualified: int = 0
    returned: int = 0
    duplicates: int = 0
    self_reconstructions: int = 0


def grafting_error(head: Segment, tail: Segment) -> float:
    """Err(head, tail) = Dis(Term(head), Init(tail))."""
    if head.state_dim != tail.state_dim:
        raise DimensionError(f"head has state dim {head.state_dim}, tail has {tail.state_dim}")
    return state_distance(head.term_state, tail.init_state)


def union(head: Segment, tail: Segment, eps: float) -> Optional[SyntheticTrajectory]:
    """Splice head onto tail when their junction error is below eps.

    The transitions are copied verbatim and re-tagged synthetic; the jump
    between head's last s_next and tail's first s is kept as is.
    """
    if eps < 0:
        raise InvalidInputError(f"eps must be non-negative, got {eps}")
    err = grafting_error(head, tail)
    if not err < eps:
        return None
    syn_head = Segment(t.as_synthetic() for t in head)
    syn_tail = Segment(t.as_synthetic() for t in tail)
    return SyntheticTrajectory(
        head=syn_head,
        tail=syn_tail,
        junction_error=err,
        quality=quality(syn_head) + quality(syn_tail),
    )


def select_top(
    au_trj: Segment,
    candidates: List[SyntheticTrajectory],
    theta: int,
) -> List[SyntheticTrajectory]:
    """Keep candidates at least as good as the authentic trajectory, top theta."""
    threshold = quality(au_trj)
    qualified = [c for c in candidates if c.quality >= threshold]
    return sorted(qualified, key=lambda c: c.quality, reverse=True)[:theta]


def graft_with_stats(
    cfg: GraftConfig,
    trajectory: Trajectory,
    lib: SegmentLibrary,
    rng: np.random.Generator,
    logger: Optional[logging.Logger] = None,
) -> Tuple[List[SyntheticTrajectory], GraftStats]:
    logger = logger or default_logger
    if len(trajectory) == 0:
        raise InvalidInputError("cannot graft an empty trajectory")
    if not trajectory.is_authentic:
        raise InvalidInputError("grafting needs an authentic trajectory")
    stats = GraftStats()
    size = len(trajectory)

    for _ in range(cfg.n_ext):
        p = int(rng.integers(0, size))
        tail = trajectory[p:]
        lib.insert(tail.init_state, tail)
        stats.extracted += 1

    own = trajectory.fingerprint()
    pool: List[SyntheticTrajectory] = []
    seen: Set[Tuple[int, int]] = set()
    for _ in range(cfg.n_gft):
        q = int(rng.integers(0, size))
        head = trajectory[:q + 1]
        for entry in lib.get_entries(trajectory[q].s_next, cfg.eps):
            if (q, entry.entry_id) in seen:
                stats.duplicates += 1
                continue
            seen.add((q, entry.entry_id))
            syn = union(head, entry.segment, cfg.eps)
            if syn is None:
                continue
            if len(syn) == size and head.fingerprint() + entry.segment.fingerprint() == own:
                stats.self_reconstructions += 1
                continue
            pool.append(syn)

    stats.candidates_found = len(pool)
    threshold = quality(trajectory)
    stats.candidates_qualified = sum(1 for c in pool if c.quality >= threshold)
    selected = select_top(trajectory, pool, cfg.theta)
    stats.returned = len(selected)
    logger.debug(
        f"Graft eps={cfg.eps:.3f}: {stats.candidates_found} candidates, "
        f"{stats.candidates_qualified} qualified, {stats.returned} returned"
    )
    return selected, stats


def graft(
    cfg: GraftConfig,
    trajectory: Trajectory,
    lib: SegmentLibrary,
    rng: np.random.Generator,
    logger: Optional[logging.Logger] = None,
) -> List[SyntheticTrajectory]:
    """Generate at most ``cfg.theta`` synthetic trajectories from ``trajectory``."""
    selected, _ = graft_with_stats(cfg, trajectory, lib, rng, logger)
    return selected
