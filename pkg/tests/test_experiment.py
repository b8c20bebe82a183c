"""
Tests for the multi-seed experiment runner and the report post-pass.
"""

import asyncio
import json
import os

import pytest
import yaml

from graftrl.exceptions import ConfigError, InvalidInputError, RunAbortedError, TrainingDivergedError
from graftrl.experiment import (
    AggregateRow,
    ExperimentConfig,
    aggregate_runs,
    load_condition,
    load_config_file,
    parse_seeds,
    read_aggregate_csv,
    report,
    run_experiment,
    run_file_name,
)
from graftrl.manager import TrainingManager
from graftrl.metrics import auc
from graftrl.runlog import EpisodeRecord, RunLog


def experiment(tiny_config, out_dir, **kwargs):
    values = dict(env='linewalker', mode='noeg', out_dir=str(out_dir), episodes=6, seeds=[1, 2],
                  policy_window=3, config=tiny_config)
    values.update(kwargs)
    return ExperimentConfig(**values)


def run_log_of(returns, eps=None):
    log = RunLog('eg')
    for i, r in enumerate(returns, start=1):
        log.append(EpisodeRecord(episode=i, episode_return=r, epsilon_used=eps))
    return log


class TestExperimentConfig:
    def test_eg_needs_eps(self, tiny_config, tmp_path):
        with pytest.raises(ConfigError):
            experiment(tiny_config, tmp_path, mode='eg').validate()

    def test_eps_only_for_eg(self, tiny_config, tmp_path):
        with pytest.raises(ConfigError):
            experiment(tiny_config, tmp_path, mode='autoeg', eps=[0.5]).validate()

    @pytest.mark.parametrize("kwargs", [{'seeds': []}, {'seeds': [1, 1]}, {'policy_window': 7},
                                        {'policy_window': 0}, {'parallel': 0}, {'mode': 'offline'}])
    def test_rejects_bad_values(self, tiny_config, tmp_path, kwargs):
        with pytest.raises(ConfigError):
            experiment(tiny_config, tmp_path, **kwargs).validate()

    def test_conditions(self, tiny_config, tmp_path):
        single = experiment(tiny_config, tmp_path, mode='eg', eps=[0.5])
        assert single.conditions() == [(0.5, str(tmp_path))]
        sweep = experiment(tiny_config, tmp_path, mode='eg', eps=[0.1, 0.5])
        assert sweep.conditions() == [
            (0.1, os.path.join(str(tmp_path), 'eg_eps0.1')),
            (0.5, os.path.join(str(tmp_path), 'eg_eps0.5')),
        ]
        assert experiment(tiny_config, tmp_path).conditions() == [(None, str(tmp_path))]

    def test_from_mapping_splits_keys(self, tmp_path):
        cfg = ExperimentConfig.from_mapping({
            'env': 'pointgoal', 'mode': 'eg', 'out_dir': str(tmp_path), 'eps': 0.3,
            'seeds': '1,2', 'episodes': 10, 'policy_window': 5, 'horizon': 3,
        })
        assert cfg.eps == [0.3]
        assert cfg.seeds == [1, 2]
        assert cfg.config.horizon == 3

    def test_from_mapping_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping({'env': 'pointgoal', 'mode': 'noeg', 'out_dir': str(tmp_path), 'speed': 1})
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping({'env': 'pointgoal', 'mode': 'noeg'})


class TestHelpers:
    @pytest.mark.parametrize("value,expected", [("1,2,3", [1, 2, 3]), ("4 5", [4, 5]), (7, [7]),
                                                (["1,2", "3"], [1, 2, 3])])
    def test_parse_seeds(self, value, expected):
        assert parse_seeds(value) == expected

    def test_parse_seeds_rejects_words(self):
        with pytest.raises(ConfigError):
            parse_seeds("one")

    def test_run_file_name(self):
        assert run_file_name('pendulum', 'autoeg', 3) == 'run_pendulum_autoeg_seed3.csv'
        assert run_file_name('pendulum', 'eg', 1, kind='agent', ext='grft') == 'agent_pendulum_eg_seed1.grft'

    def test_load_config_file(self, tmp_path):
        path = tmp_path / 'cfg.yaml'
        path.write_text("env: pendulum\nhorizon: 4\nenv_params:\n  max_steps: 10\n")
        assert load_config_file(str(path)) == {'env': 'pendulum', 'horizon': 4, 'env_params': {'max_steps': 10}}

    def test_load_config_file_errors(self, tmp_path):
        nested = tmp_path / 'nested.yaml'
        nested.write_text("tutor:\n  horizon: 4\n")
        with pytest.raises(ConfigError):
            load_config_file(str(nested))
        broken = tmp_path / 'broken.yaml'
        broken.write_text("env: [pendulum\n")
        with pytest.raises(ConfigError):
            load_config_file(str(broken))
        with pytest.raises(ConfigError):
            load_config_file(str(tmp_path / 'missing.yaml'))

    def test_aggregate_runs(self):
        rows = aggregate_runs([run_log_of([1.0, 2.0, 3.0], eps=0.2), run_log_of([3.0, 4.0, 5.0], eps=0.4)], 2)
        by_name = {r.metric: r for r in rows}
        assert by_name['auc'].mean == 9.0
        assert by_name['auc'].stddev == pytest.approx(4.242640687, rel=1e-9)
        assert by_name['policy_quality'].mean == 3.5
        assert by_name['final_return'].mean == 4.0
        assert by_name['mean_epsilon'].mean == pytest.approx(0.3)
        assert all(r.n_seeds == 2 for r in rows)

    def test_aggregate_rejects_runs_shorter_than_the_window(self):
        with pytest.raises(InvalidInputError):
            aggregate_runs([run_log_of([1.0, 2.0, 3.0]), run_log_of([1.0])], 2)

    def test_aggregate_without_grafting_has_no_epsilon(self):
        rows = aggregate_runs([run_log_of([1.0])], 1)
        assert [r.metric for r in rows] == ['auc', 'policy_quality', 'final_return']


class TestRunExperiment:
    @pytest.mark.asyncio
    async def test_noeg_writes_runs_and_aggregate(self, tiny_config, tmp_path):
        cfg = experiment(tiny_config, tmp_path)
        reports = await run_experiment(cfg)
        assert len(reports) == 1
        names = sorted(os.listdir(tmp_path))
        assert names == ['aggregate.csv', 'config.yaml', 'run_linewalker_noeg_seed1.csv',
                         'run_linewalker_noeg_seed2.csv', 'summary.json']
        rows = read_aggregate_csv(str(tmp_path / 'aggregate.csv'))
        assert {r.metric for r in rows} == {'auc', 'policy_quality', 'final_return'}
        assert all(r.n_seeds == 2 for r in rows)

        runs = load_condition(str(tmp_path))
        assert sorted(runs) == [1, 2]
        assert reports[0].metric('auc').mean == pytest.approx(
            (auc(runs[1].returns()) + auc(runs[2].returns())) / 2, abs=1e-9
        )

        meta = yaml.safe_load((tmp_path / 'config.yaml').read_text())
        assert meta['config_hash'] == reports[0].config_hash
        assert meta['horizon'] == tiny_config.horizon
        summary = json.loads((tmp_path / 'summary.json').read_text())
        assert summary['seeds_completed'] == [1, 2]
        assert summary['seeds_aborted'] == {}

    @pytest.mark.asyncio
    async def test_reruns_are_byte_identical(self, tiny_config, tmp_path):
        first = experiment(tiny_config, tmp_path / 'a', mode='autoeg', parallel=2)
        second = experiment(tiny_config, tmp_path / 'b', mode='autoeg', parallel=1)
        await run_experiment(first)
        await run_experiment(second)
        for name in ('run_linewalker_autoeg_seed1.csv', 'run_linewalker_autoeg_seed2.csv',
                     'library_linewalker_autoeg_seed1.csv', 'aggregate.csv'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    @pytest.mark.asyncio
    async def test_eg_sweep_and_agents(self, tiny_config, tmp_path):
        cfg = experiment(tiny_config, tmp_path, mode='eg', eps=[0.1, 0.5], seeds=[3], save_agents=True)
        reports = await run_experiment(cfg)
        assert [r.eps for r in reports] == [0.1, 0.5]
        for sub in ('eg_eps0.1', 'eg_eps0.5'):
            files = set(os.listdir(tmp_path / sub))
            assert {'run_linewalker_eg_seed3.csv', 'library_linewalker_eg_seed3.csv',
                    'agent_linewalker_eg_seed3.grft', 'aggregate.csv'} <= files
        assert reports[0].metric('mean_epsilon').mean == pytest.approx(0.1)

    @pytest.mark.asyncio
    async def test_aborted_seed_keeps_partial_output(self, tiny_config, tmp_path, monkeypatch):
        original = TrainingManager._train_episode

        def flaky(self, index, total):
            if self.seed == 2 and index == 3:
                raise TrainingDivergedError("critic loss became non-finite", {'critic_loss': float('nan')})
            return original(self, index, total)

        monkeypatch.setattr(TrainingManager, '_train_episode', flaky)
        cfg = experiment(tiny_config, tmp_path)
        with pytest.raises(RunAbortedError) as exc_info:
            await run_experiment(cfg)

        (condition,) = exc_info.value.reports
        assert sorted(condition.runs) == [1]
        assert sorted(condition.aborted) == [2]
        assert all(r.n_seeds == 1 for r in condition.aggregate)
        partial = RunLog.read_csv(str(tmp_path / 'partial_linewalker_noeg_seed2.csv'))
        assert len(partial) == 3
        assert not (tmp_path / 'run_linewalker_noeg_seed2.csv').exists()
        summary = json.loads((tmp_path / 'summary.json').read_text())
        assert list(summary['seeds_aborted']) == ['2']

        # Recomputing from disk sees the same completed seeds as the run did.
        before = (tmp_path / 'aggregate.csv').read_bytes()
        rows, _ = report(str(tmp_path))
        assert rows == condition.aggregate
        assert (tmp_path / 'aggregate.csv').read_bytes() == before

    def test_report_skips_seeds_listed_as_aborted(self, tmp_path):
        for seed, returns in {1: [1.0, 2.0, 3.0], 2: [-9.0]}.items():
            run_log_of(returns).write_csv(str(tmp_path / run_file_name('linewalker', 'noeg', seed)))
        (tmp_path / 'summary.json').write_text(json.dumps({'seeds_aborted': {'2': 'diverged'}}))
        assert sorted(load_condition(str(tmp_path))) == [1]
        rows, _ = report(str(tmp_path), policy_window=3)
        assert all(r.n_seeds == 1 for r in rows)

    def test_validation_happens_before_any_run(self, tiny_config, tmp_path):
        with pytest.raises(ConfigError):
            asyncio.run(run_experiment(experiment(tiny_config, tmp_path, mode='eg')))
        assert not any(tmp_path.iterdir())


class TestReport:
    def write_condition(self, directory, mode, runs):
        os.makedirs(directory, exist_ok=True)
        for seed, returns in runs.items():
            run_log_of(returns).write_csv(os.path.join(directory, run_file_name('pendulum', mode, seed)))

    def test_recomputes_aggregate(self, tmp_path):
        self.write_condition(tmp_path, 'noeg', {1: [1.0, 2.0, 3.0], 2: [2.0, 2.0, 2.0]})
        rows, comparison = report(str(tmp_path), policy_window=1)
        assert comparison is None
        assert {r.metric: r.mean for r in rows} == {'auc': 6.0, 'policy_quality': 2.5, 'final_return': 2.5}
        assert read_aggregate_csv(str(tmp_path / 'aggregate.csv')) == rows

    def test_uses_recorded_window(self, tmp_path):
        self.write_condition(tmp_path, 'noeg', {1: [0.0, 4.0, 8.0]})
        (tmp_path / 'config.yaml').write_text(yaml.safe_dump({'policy_window': 2}))
        rows, _ = report(str(tmp_path))
        assert {r.metric: r.mean for r in rows}['policy_quality'] == 6.0

    def test_comparison_against_baseline(self, tmp_path):
        ours, base = tmp_path / 'autoeg', tmp_path / 'noeg'
        self.write_condition(ours, 'autoeg', {1: [-1.0, -1.0], 2: [-2.0, -2.0]})
        self.write_condition(base, 'noeg', {1: [-2.0, -2.0], 2: [-4.0, -4.0]})
        _, comparison = report(str(ours), str(base), policy_window=1)
        assert comparison.auc_a == -3.0
        assert comparison.auc_b == -6.0
        assert comparison.improvement_of_means == pytest.approx(0.5)
        assert comparison.mean_improvement == pytest.approx(0.5)
        assert comparison.policy_quality_a == -1.5

    def test_empty_directory(self, tmp_path):
        with pytest.raises(InvalidInputError):
            report(str(tmp_path))

    def test_aggregate_row_format(self):
        assert AggregateRow('auc', 1.5, 0.0, 2).to_row()[0::3] == ['auc', '2']
