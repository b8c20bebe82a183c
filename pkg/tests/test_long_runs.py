"""
Long runs with the default configuration. Deselected by default; run with ``pytest -m slow``.
"""

import asyncio
import math
import os

import pytest

from graftrl import Config, autoeg_train, noeg_train
from graftrl.experiment import ExperimentConfig, report, run_experiment
from graftrl.metrics import policy_quality

pytestmark = pytest.mark.slow

SEEDS = [1, 2, 3, 4, 5]
SWEEP_EPS = [0.2, 0.5, 1.0]


def test_default_autoeg_on_pendulum_stays_well_formed():
    log = autoeg_train(Config(), 'pendulum', episodes=60, seed=1)
    assert len(log) == 60
    assert all(math.isfinite(r.episode_return) for r in log)
    assert all(0.0 <= r.epsilon_used <= 1.0 for r in log)
    assert all(0.0 <= r.synth_ratio <= 1.0 for r in log)
    boundaries = [r for r in log if r.tutor_reward is not None]
    assert len(boundaries) == 6
    assert all(r.synth_ratio == 0.0 for r in boundaries)


@pytest.mark.parametrize("seed", SEEDS)
def test_pendulum_baseline_learns(seed):
    returns = noeg_train(Config(), 'pendulum', episodes=300, seed=seed).returns()
    first = sum(returns[:50]) / 50
    last = policy_quality(returns, 50)
    print(f"\nseed {seed}: first-50 mean {first:.1f}, last-50 mean {last:.1f}")
    assert last > first


def test_linewalker_grafting_against_baseline(tmp_path):
    """AutoEG, EG over an eps sweep and no-EG on LineWalker; the AUC comparison is printed, not gated."""
    out = {mode: str(tmp_path / mode) for mode in ('noeg', 'autoeg', 'eg')}
    for mode, eps in (('noeg', []), ('autoeg', []), ('eg', SWEEP_EPS)):
        cfg = ExperimentConfig(env='linewalker', mode=mode, out_dir=out[mode], eps=list(eps),
                               episodes=2000, seeds=list(SEEDS), parallel=len(SEEDS))
        reports = asyncio.run(run_experiment(cfg))
        assert all(sorted(r.runs) == SEEDS for r in reports)

    columns = [('AutoEG', out['autoeg'])]
    columns += [(f"EG eps={e:g}", os.path.join(out['eg'], f"eg_eps{e:g}")) for e in SWEEP_EPS]
    print(f"\n{'condition':<14} {'AUC':>14} {'no-EG AUC':>14} {'improvement':>12} {'per-seed':>10}")
    for label, directory in columns:
        _, comparison = report(directory, out['noeg'])
        assert comparison is not None
        assert math.isfinite(comparison.auc_a) and math.isfinite(comparison.auc_b)
        per_seed = comparison.mean_improvement
        per_seed_text = 'n/a' if per_seed is None else f"{per_seed:+.1%}"
        print(f"{label:<14} {comparison.auc_a:>14.1f} {comparison.auc_b:>14.1f} "
              f"{comparison.improvement_of_means:>+12.1%} {per_seed_text:>10}")
