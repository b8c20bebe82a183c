"""
Replay the two-trial walker fixture and show the trajectory grafting builds from it.

Trial 1 starts well but falls after reaching the mid-stride state M.
Trial 2 starts slowly, passes through the same state M and then walks
on. Grafting trial 1's good start onto trial 2's continuation from M
yields a trial better than either.
"""

from typing import List, Optional, Tuple

import numpy as np

from .experience import Segment, Trajectory, Transition, quality, write_trajectories_csv
from .grafting import GraftConfig, SyntheticTrajectory, graft_with_stats
from .library import SegmentLibrary

MID_STATE = (0.5, 0.9, 0.2)
FIXTURE_SEED = 7


def _trial(steps: List[Tuple[Tuple[float, ...], Tuple[float, ...], float]], action: Tuple[float, float]) -> Trajectory:
    return Trajectory(Transition(s, action, r, s_next) for s, s_next, r in steps)


def build_walker_fixture() -> Tuple[Trajectory, Trajectory, SegmentLibrary]:
    """Return (trial 1, trial 2, library holding trial 2's tail from M)."""
    m = MID_STATE
    trial1 = _trial([
        ((0.0, 0.0, 0.0), (0.2, 0.5, 0.1), 1.0),
        ((0.2, 0.5, 0.1), m, 1.0),
        (m, (0.6, 0.1, 0.9), -1.0),
    ], action=(1.0, 0.0))
    trial2 = _trial([
        ((0.0, 0.0, 0.0), (0.05, 0.1, 0.0), 0.1),
        ((0.05, 0.1, 0.0), m, 0.1),
        (m, (0.8, 0.9, 0.2), 1.0),
        ((0.8, 0.9, 0.2), (0.9, 0.95, 0.25), 1.0),
    ], action=(0.3, 0.1))
    lib = SegmentLibrary()
    tail = trial2[2:]
    lib.insert(tail.init_state, tail)
    return trial1, trial2, lib


def graft_walker_fixture(seed: int = FIXTURE_SEED) -> List[SyntheticTrajectory]:
    trial1, _, lib = build_walker_fixture()
    cfg = GraftConfig(eps=0.05, n_ext=0, n_gft=100, theta=5)
    synthetic, _ = graft_with_stats(cfg, trial1, lib, np.random.default_rng(seed))
    return synthetic


def _print_segment(seg: Segment, indent: str = "   ") -> None:
    for i, t in enumerate(seg):
        s = ", ".join(f"{x:.2f}" for x in t.s)
        s_next = ", ".join(f"{x:.2f}" for x in t.s_next)
        print(f"{indent}{i}. ({s}) -> ({s_next})  r={t.r:+.2f}  [{t.provenance.value}]")


def demo_graft(dump_path: Optional[str] = None) -> List[SyntheticTrajectory]:
    """Print both trials and the synthetic trajectory grafted from them."""
    print("=== Experience Grafting: two-trial walker fixture ===\n")
    trial1, trial2, _ = build_walker_fixture()

    print(f"🔹 Trial 1 (good start, falls), quality {quality(trial1):.2f}")
    _print_segment(trial1)
    print(f"\n🔹 Trial 2 (slow start, keeps walking), quality {quality(trial2):.2f}")
    _print_segment(trial2)

    synthetic = graft_walker_fixture()
    print(f"\n🌱 Grafting produced {len(synthetic)} synthetic trajectory(ies)")
    for syn in synthetic:
        print(f"\n   junction error {syn.junction_error:.4f}, quality {syn.quality:.2f}")
        print("   head (from trial 1):")
        _print_segment(syn.head, indent="      ")
        print("   tail (from trial 2):")
        _print_segment(syn.tail, indent="      ")

    if dump_path:
        rows = write_trajectories_csv(
            dump_path,
            [(1, trial1), (2, trial2)] + [(3 + i, s.as_segment()) for i, s in enumerate(synthetic)],
        )
        print(f"\n💾 Wrote {rows} transitions to {dump_path}")
    return synthetic


if __name__ == "__main__":
    demo_graft()
