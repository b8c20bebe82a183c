"""
Per-episode run records and their CSV form.
"""

import csv
import os
from dataclasses import dataclass
from typing import Iterator, List, Optional

from .exceptions import InvalidInputError
from .utils import format_float

RUN_CSV_HEADER = [
    'episode', 'return', 'epsilon_used', 'n_synth_generated',
    'n_synth_stored', 'synth_ratio', 'tutor_reward',
]


@dataclass
class EpisodeRecord:
    """
    One EG episode as seen by the harness.

    ``synth_ratio`` is read after the episode's Tutor bookkeeping, so it is
    0 on horizon boundaries. ``tutor_reward`` is only set on the episodes
    that close a horizon window.
    """
    episode: int
    episode_return: float
    epsilon_used: Optional[float] = None
    n_synth_generated: Optional[int] = None
    n_synth_stored: Optional[int] = None
    synth_ratio: float = 0.0
    tutor_reward: Optional[float] = None
    steps: int = 0

    def to_row(self) -> List[str]:
        def opt_float(v: Optional[float]) -> str:
            return '' if v is None else format_float(v)

        def opt_int(v: Optional[int]) -> str:
            return '' if v is None else str(v)

        return [
            str(self.episode),
            format_float(self.episode_return),
            opt_float(self.epsilon_used),
            opt_int(self.n_synth_generated),
            opt_int(self.n_synth_stored),
            format_float(self.synth_ratio),
            opt_float(self.tutor_reward),
        ]

    @classmethod
    def from_row(cls, row: dict) -> "EpisodeRecord":
        def opt_float(value: str) -> Optional[float]:
            return None if value == '' else float(value)

        def opt_int(value: str) -> Optional[int]:
            return None if value == '' else int(value)

        return cls(
            episode=int(row['episode']),
            episode_return=float(row['return']),
            epsilon_used=opt_float(row['epsilon_used']),
            n_synth_generated=opt_int(row['n_synth_generated']),
            n_synth_stored=opt_int(row['n_synth_stored']),
            synth_ratio=float(row['synth_ratio']),
            tutor_reward=opt_float(row['tutor_reward']),
        )


class RunLog:
    """Ordered episode records of one seeded run."""

    def __init__(self, mode: str = '', env_name: str = '', seed: Optional[int] = None):
        self.mode = mode
        self.env_name = env_name
        self.seed = seed
        self.records: List[EpisodeRecord] = []
        self.aborted: Optional[str] = None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EpisodeRecord]:
        return iter(self.records)

    def __getitem__(self, index: int) -> EpisodeRecord:
        return self.records[index]

    def append(self, record: EpisodeRecord) -> None:
        expected = len(self.records) + 1
        if record.episode != expected:
            raise InvalidInputError(f"episode {record.episode} recorded where {expected} was expected")
        self.records.append(record)

    def returns(self) -> List[float]:
        return [r.episode_return for r in self.records]

    def write_csv(self, path: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(RUN_CSV_HEADER)
            for record in self.records:
                writer.writerow(record.to_row())

    @classmethod
    def read_csv(cls, path: str, mode: str = '', env_name: str = '', seed: Optional[int] = None) -> "RunLog":
        log = cls(mode, env_name, seed)
        with open(path, newline='') as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != RUN_CSV_HEADER:
                raise InvalidInputError(f"{path} does not carry the run CSV header")
            for row in reader:
                log.append(EpisodeRecord.from_row(row))
        return log
