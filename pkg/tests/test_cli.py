"""
Tests for the graftrl command-line interface.
"""

import os

import yaml

from graftrl.cli import build_experiment_config, create_parser, main


def write_tiny_config(path, **extra):
    values = {
        'hidden_sizes': [8, 8], 'tutor_hidden_sizes': [8, 8], 'warmup': 50, 'tutor_warmup': 5,
        'batch_size': 8, 'tutor_batch_size': 4, 'env_params': {'max_steps': 20},
    }
    values.update(extra)
    path.write_text(yaml.safe_dump(values))
    return str(path)


def test_no_command_prints_help(capsys):
    assert main([]) == 1
    assert "usage: graftrl" in capsys.readouterr().out


def test_flags_override_config_file(tmp_path):
    config = write_tiny_config(tmp_path / 'cfg.yaml', env='pendulum', episodes=50, horizon=3)
    args = create_parser().parse_args([
        'run', '--config', config, '--env', 'linewalker', '--mode', 'eg', '--epsilon', '0.2',
        '--epsilon', '0.4', '--seeds', '1,2', '3', '--out', str(tmp_path / 'out'), '--policy-window', '5',
    ])
    cfg = build_experiment_config(args)
    assert cfg.env == 'linewalker'
    assert cfg.episodes == 50
    assert cfg.eps == [0.2, 0.4]
    assert cfg.seeds == [1, 2, 3]
    assert cfg.config.horizon == 3
    assert cfg.save_agents is False


def test_run_then_report(tmp_path, capsys):
    config = write_tiny_config(tmp_path / 'cfg.yaml')
    out = tmp_path / 'noeg'
    argv = ['run', '--config', config, '--env', 'linewalker', '--mode', 'noeg', '--episodes', '4',
            '--seeds', '1', '2', '--policy-window', '2', '--out', str(out)]
    assert main(argv) == 0
    printed = capsys.readouterr().out
    assert "Experiment completed" in printed
    assert os.path.exists(out / 'run_linewalker_noeg_seed2.csv')

    before = (out / 'aggregate.csv').read_bytes()
    assert main(['report', '--in', str(out)]) == 0
    assert (out / 'aggregate.csv').read_bytes() == before

    assert main(['report', '--in', str(out), '--baseline', str(out)]) == 0
    assert "+0.0%" in capsys.readouterr().out


def test_eg_without_epsilon_fails(tmp_path, capsys):
    config = write_tiny_config(tmp_path / 'cfg.yaml')
    code = main(['run', '--config', config, '--env', 'pendulum', '--mode', 'eg', '--out', str(tmp_path / 'o')])
    assert code == 1
    assert "Error" in capsys.readouterr().out
    assert not (tmp_path / 'o').exists()


def test_report_on_empty_directory(tmp_path, capsys):
    assert main(['report', '--in', str(tmp_path)]) == 1
    assert "no run CSVs" in capsys.readouterr().out


def test_graft_demo(tmp_path, capsys):
    dump = tmp_path / 'demo.csv'
    assert main(['graft-demo', '--dump', str(dump)]) == 0
    out = capsys.readouterr().out
    assert "Grafting produced 1 synthetic" in out
    assert dump.exists()
