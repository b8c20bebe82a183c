"""
Multi-seed experiment runner for the noeg / eg / autoeg conditions.

Seeds run concurrently in worker threads (``asyncio.to_thread`` bounded by
a semaphore); every run is share-nothing and writes its own CSV, and
aggregation is a post-pass over the completed runs. Output layout of one
condition directory::

    run_<env>_<mode>_seed<n>.csv     per-episode records
    partial_<env>_<mode>_seed<n>.csv episodes completed before a seed aborted
    library_<env>_<mode>_seed<n>.csv bin occupancy of the segment library
    agent_<env>_<mode>_seed<n>.grft  final EG agent (with save_agents)
    aggregate.csv                    metric,mean,stddev,n_seeds
    config.yaml                      effective configuration and its hash
    summary.json                     seeds completed / aborted, metric means
"""

import asyncio
import csv
import dataclasses
import glob
import json
import logging
import os
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Set, Tuple

import yaml

from .exceptions import ConfigError, GraftError, InvalidInputError, RunAbortedError, TrainingDivergedError
from .graftrl import Config
from .manager import MODES
from .metrics import auc, auc_improvement, policy_quality, summarize
from .runlog import RunLog
from .utils import calculate_config_hash, default_logger, format_float

AGGREGATE_CSV_HEADER = ['metric', 'mean', 'stddev', 'n_seeds']
RUN_FILE_PATTERN = re.compile(r'^run_(?P<env>[A-Za-z0-9]+)_(?P<mode>noeg|eg|autoeg)_seed(?P<seed>-?\d+)\.csv$')


@dataclass
class ExperimentConfig:
    """One experimental condition (or an eg sweep) over several seeds."""
    env: str
    mode: str
    out_dir: str
    eps: List[float] = field(default_factory=list)
    episodes: int = 2000
    seeds: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    policy_window: int = 100
    parallel: int = 1
    save_agents: bool = False
    config: Config = field(default_factory=Config)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.mode == 'eg' and not self.eps:
            raise ConfigError("mode eg needs at least one --epsilon")
        if self.mode != 'eg' and self.eps:
            raise ConfigError(f"--epsilon only applies to mode eg, not {self.mode}")
        if any(e < 0 for e in self.eps):
            raise ConfigError(f"grafting thresholds must be non-negative, got {self.eps}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"duplicate seeds in {self.seeds}")
        if self.episodes < 1:
            raise ConfigError(f"episodes must be positive, got {self.episodes}")
        if not 1 <= self.policy_window <= self.episodes:
            raise ConfigError(
                f"policy window must lie in [1, episodes={self.episodes}], got {self.policy_window}"
            )
        if self.parallel < 1:
            raise ConfigError(f"parallel must be positive, got {self.parallel}")
        if not self.out_dir:
            raise ConfigError("an output directory is required")
        self.config.validate()

    def conditions(self) -> List[Tuple[Optional[float], str]]:
        """(fixed eps, output directory) per condition; an eg sweep gets one sub-directory per eps."""
        if self.mode != 'eg':
            return [(None, self.out_dir)]
        if len(self.eps) == 1:
            return [(self.eps[0], self.out_dir)]
        return [(e, os.path.join(self.out_dir, f"eg_eps{e:g}")) for e in self.eps]

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != 'config'
        }
        out['eps'] = [float(e) for e in self.eps]
        out['seeds'] = [int(s) for s in self.seeds]
        out.update(self.config.to_dict())
        return out

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "ExperimentConfig":
        """Split flat keys into experiment fields and training ``Config`` fields."""
        experiment_keys = {f.name for f in dataclasses.fields(cls)} - {'config'}
        config_keys = set(Config.field_names())
        unknown = set(values) - experiment_keys - config_keys
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ('env', 'mode', 'out_dir'):
            if key not in values:
                raise ConfigError(f"missing required key {key!r}")
        experiment = {k: v for k, v in values.items() if k in experiment_keys}
        if 'eps' in experiment:
            experiment['eps'] = _as_list(experiment['eps'], float)
        if 'seeds' in experiment:
            experiment['seeds'] = parse_seeds(experiment['seeds'])
        config = Config.from_mapping({k: v for k, v in values.items() if k in config_keys})
        cfg = cls(config=config, **experiment)
        cfg.validate()
        return cfg


@dataclass
class AggregateRow:
    metric: str
    mean: float
    stddev: float
    n_seeds: int

    def to_row(self) -> List[str]:
        return [self.metric, format_float(self.mean), format_float(self.stddev), str(self.n_seeds)]


@dataclass
class ConditionReport:
    """Outcome of one condition: completed runs, aborted seeds, aggregate."""
    out_dir: str
    mode: str
    eps: Optional[float]
    runs: Dict[int, RunLog] = field(default_factory=dict)
    aborted: Dict[int, str] = field(default_factory=dict)
    aggregate: List[AggregateRow] = field(default_factory=list)
    config_hash: str = ''

    def metric(self, name: str) -> AggregateRow:
        for row in self.aggregate:
            if row.metric == name:
                return row
        raise KeyError(name)


@dataclass
class Comparison:
    """A condition against a baseline condition, matched by seed."""
    auc_a: float
    auc_b: float
    improvement_of_means: float
    mean_improvement: Optional[float]
    policy_quality_a: float
    policy_quality_b: float


def _as_list(value: Any, cast: Any) -> List[Any]:
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(value)]


def parse_seeds(value: Any) -> List[int]:
    """Accept ``[1, 2]``, ``"1,2,3"``, ``"1 2 3"`` or a single int."""
    if isinstance(value, str):
        parts = [p for p in re.split(r'[,\s]+', value.strip()) if p]
    elif isinstance(value, (list, tuple)):
        parts = [p for item in value for p in re.split(r'[,\s]+', str(item).strip()) if p]
    else:
        parts = [str(value)]
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"seeds must be integers, got {value!r}") from None


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a flat YAML config mapping; ``env_params`` is the one nested key."""
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping of config keys")
    for key, value in data.items():
        if isinstance(value, dict) and key != 'env_params':
            raise ConfigError(f"config key {key!r} must be flat")
    return data


def run_file_name(env: str, mode: str, seed: int, kind: str = 'run', ext: str = 'csv') -> str:
    return f"{kind}_{env}_{mode}_seed{seed}.{ext}"


def aggregate_runs(runs: Sequence[RunLog], policy_window: int) -> List[AggregateRow]:
    """Mean and stddev across seeds of AUC, policy quality and final return."""
    if not runs:
        return []
    columns: Dict[str, List[float]] = {'auc': [], 'policy_quality': [], 'final_return': []}
    eps_means: List[float] = []
    for run in runs:
        returns = run.returns()
        columns['auc'].append(auc(returns))
        columns['policy_quality'].append(policy_quality(returns, policy_window))
        columns['final_return'].append(returns[-1])
        used = [r.epsilon_used for r in run if r.epsilon_used is not None]
        if used:
            eps_means.append(sum(used) / len(used))
    if eps_means:
        columns['mean_epsilon'] = eps_means
    rows = []
    for name, values in columns.items():
        mean, std = summarize(values)
        rows.append(AggregateRow(name, mean, std, len(values)))
    return rows


def write_aggregate_csv(path: str, rows: Sequence[AggregateRow]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(AGGREGATE_CSV_HEADER)
        for row in rows:
            writer.writerow(row.to_row())


def read_aggregate_csv(path: str) -> List[AggregateRow]:
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != AGGREGATE_CSV_HEADER:
            raise InvalidInputError(f"{path} does not carry the aggregate CSV header")
        return [
            AggregateRow(r['metric'], float(r['mean']), float(r['stddev']), int(r['n_seeds']))
            for r in reader
        ]


def run_seed(
    cfg: ExperimentConfig,
    eps: Optional[float],
    seed: int,
    out_dir: str,
    logger: Optional[logging.Logger] = None,
) -> RunLog:
    """Train one seed and write its CSVs; an aborted seed leaves a partial_* CSV instead of run_*."""
    logger = logger or default_logger
    manager = cfg.config.create_manager(cfg.env, seed, mode=cfg.mode, fixed_eps=eps, logger=logger)
    run_path = os.path.join(out_dir, run_file_name(cfg.env, cfg.mode, seed))
    try:
        run_log = manager.train(cfg.episodes)
    except TrainingDivergedError as e:
        partial = e.run_log if e.run_log is not None else RunLog(cfg.mode, cfg.env, seed)
        partial.aborted = partial.aborted or str(e)
        # report only reads run_* files.
        partial_path = os.path.join(out_dir, run_file_name(cfg.env, cfg.mode, seed, kind='partial'))
        partial.write_csv(partial_path)
        if os.path.exists(run_path):
            os.remove(run_path)
        logger.warning(f"Wrote partial run of {len(partial)} episodes to {partial_path}")
        raise
    run_log.write_csv(run_path)
    if cfg.mode != 'noeg':
        manager.library.write_stats_csv(
            os.path.join(out_dir, run_file_name(cfg.env, cfg.mode, seed, kind='library'))
        )
    if cfg.save_agents:
        manager.eg.save_checkpoint(
            os.path.join(out_dir, run_file_name(cfg.env, cfg.mode, seed, kind='agent', ext='grft'))
        )
    logger.info(f"Wrote {run_path}")
    return run_log


async def _run_seed_async(
    cfg: ExperimentConfig,
    eps: Optional[float],
    seed: int,
    out_dir: str,
    semaphore: asyncio.Semaphore,
    logger: logging.Logger,
) -> Tuple[int, Optional[RunLog], Optional[str]]:
    async with semaphore:
        try:
            run_log = await asyncio.to_thread(run_seed, cfg, eps, seed, out_dir, logger)
        except TrainingDivergedError as e:
            return seed, e.run_log, str(e)
    return seed, run_log, None


def write_run_metadata(report: ConditionReport, cfg: ExperimentConfig) -> None:
    """Write config.yaml and summary.json next to the run CSVs."""
    effective = cfg.to_dict()
    effective['out_dir'] = report.out_dir
    effective['eps'] = [] if report.eps is None else [report.eps]
    report.config_hash = calculate_config_hash(effective)
    with open(os.path.join(report.out_dir, 'config.yaml'), 'w') as f:
        yaml.safe_dump({**effective, 'config_hash': report.config_hash}, f, sort_keys=True)
    summary = {
        'config_hash': report.config_hash,
        'mode': report.mode,
        'eps': report.eps,
        'seeds_completed': sorted(report.runs),
        'seeds_aborted': {str(s): msg for s, msg in sorted(report.aborted.items())},
        'metrics': {row.metric: row.mean for row in report.aggregate},
    }
    with open(os.path.join(report.out_dir, 'summary.json'), 'w') as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write('\n')


async def run_condition(
    cfg: ExperimentConfig,
    eps: Optional[float],
    out_dir: str,
    logger: Optional[logging.Logger] = None,
) -> ConditionReport:
    """Run every seed of one condition and write its outputs."""
    logger = logger or default_logger
    os.makedirs(out_dir, exist_ok=True)
    semaphore = asyncio.Semaphore(cfg.parallel)
    label = cfg.mode if eps is None else f"{cfg.mode}(eps={eps:g})"
    logger.info(f"Running {label} on {cfg.env}: {len(cfg.seeds)} seeds x {cfg.episodes} episodes")

    results = await asyncio.gather(*[
        _run_seed_async(cfg, eps, seed, out_dir, semaphore, logger) for seed in cfg.seeds
    ])

    report = ConditionReport(out_dir=out_dir, mode=cfg.mode, eps=eps)
    for seed, run_log, error in results:
        if error is None and run_log is not None:
            report.runs[seed] = run_log
        else:
            report.aborted[seed] = error or 'aborted'
    report.aggregate = aggregate_runs([report.runs[s] for s in sorted(report.runs)], cfg.policy_window)
    write_aggregate_csv(os.path.join(out_dir, 'aggregate.csv'), report.aggregate)
    write_run_metadata(report, cfg)

    for row in report.aggregate:
        logger.info(f"{label} {row.metric}: {row.mean:.3f} +/- {row.stddev:.3f} over {row.n_seeds} seeds")
    return report


async def run_experiment(cfg: ExperimentConfig, logger: Optional[logging.Logger] = None) -> List[ConditionReport]:
    """Run all conditions of ``cfg``.

    Raises RunAbortedError after writing every output when any seed aborted;
    the error carries the condition reports.
    """
    cfg.validate()
    logger = logger or default_logger
    reports = []
    for eps, out_dir in cfg.conditions():
        reports.append(await run_condition(cfg, eps, out_dir, logger))
    aborted = [(r.out_dir, seed) for r in reports for seed in sorted(r.aborted)]
    if aborted:
        error = RunAbortedError(
            f"{len(aborted)} run(s) aborted: " + ", ".join(f"seed {s} in {d}" for d, s in aborted),
            reports,
        )
        logger.error(str(error))
        raise error
    return reports


def _aborted_seeds(in_dir: str) -> Set[int]:
    path = os.path.join(in_dir, 'summary.json')
    if not os.path.exists(path):
        return set()
    with open(path) as f:
        summary = json.load(f)
    return {int(s) for s in summary.get('seeds_aborted', {})}


def load_condition(in_dir: str) -> Dict[int, RunLog]:
    """Read every completed per-run CSV in ``in_dir``, keyed by seed.

    Seeds that summary.json lists as aborted are skipped.
    """
    aborted = _aborted_seeds(in_dir)
    runs: Dict[int, RunLog] = {}
    for path in sorted(glob.glob(os.path.join(in_dir, 'run_*.csv'))):
        match = RUN_FILE_PATTERN.match(os.path.basename(path))
        if not match:
            continue
        seed = int(match['seed'])
        if seed in aborted:
            continue
        runs[seed] = RunLog.read_csv(path, match['mode'], match['env'], seed)
    if not runs:
        raise InvalidInputError(f"no run CSVs found in {in_dir}")
    return runs


def _policy_window_of(in_dir: str, default: int = 100) -> int:
    path = os.path.join(in_dir, 'config.yaml')
    if not os.path.exists(path):
        return default
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    return int(data.get('policy_window', default))


def report(
    in_dir: str,
    baseline_dir: Optional[str] = None,
    policy_window: Optional[int] = None,
    logger: Optional[logging.Logger] = None,
) -> Tuple[List[AggregateRow], Optional[Comparison]]:
    """Recompute aggregate.csv from the per-run CSVs; optionally compare against a baseline directory."""
    logger = logger or default_logger
    window = policy_window or _policy_window_of(in_dir)
    runs = load_condition(in_dir)
    rows = aggregate_runs([runs[s] for s in sorted(runs)], window)
    write_aggregate_csv(os.path.join(in_dir, 'aggregate.csv'), rows)
    logger.info(f"Recomputed aggregate over {len(runs)} runs in {in_dir}")
    if baseline_dir is None:
        return rows, None

    base_window = policy_window or _policy_window_of(baseline_dir)
    base_runs = load_condition(baseline_dir)
    base_rows = aggregate_runs([base_runs[s] for s in sorted(base_runs)], base_window)
    by_name = {r.metric: r for r in rows}
    base_by_name = {r.metric: r for r in base_rows}
    auc_a, auc_b = by_name['auc'].mean, base_by_name['auc'].mean

    shared = sorted(set(runs) & set(base_runs))
    mean_improvement = None
    if shared:
        try:
            per_seed = [auc_improvement(auc(runs[s].returns()), auc(base_runs[s].returns())) for s in shared]
            mean_improvement = sum(per_seed) / len(per_seed)
        except GraftError as e:
            logger.warning(f"Per-seed AUC improvement undefined: {e}")
    comparison = Comparison(
        auc_a=auc_a,
        auc_b=auc_b,
        improvement_of_means=auc_improvement(auc_a, auc_b),
        mean_improvement=mean_improvement,
        policy_quality_a=by_name['policy_quality'].mean,
        policy_quality_b=base_by_name['policy_quality'].mean,
    )
    return rows, comparison
