"""
Segment library: tail segments indexed by their quantized initial state.

The state space is cut into axis-aligned bins of side ``bin_size``; a
lookup only scans the bin that contains the query and keeps the entries
whose key state lies strictly within ``eps`` of the query under
``state_distance``. Bins are FIFO-bounded by ``bin_capacity``.
"""

import csv
import logging
import os
from collections import Counter, deque
from dataclasses import dataclass
from typing import Deque, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .distance import state_distances
from .exceptions import ConfigError, InvalidInputError
from .experience import Segment
from .utils import default_logger

BinKey = Tuple[int, ...]


def quantize(s: Union[Sequence[float], np.ndarray], bin_size: float) -> BinKey:
    """Per-dimension floor division of a state by the bin size."""
    if not bin_size > 0:
        raise ConfigError(f"bin_size must be positive, got {bin_size}")
    arr = np.asarray(s, dtype=np.float64)
    return tuple(int(c) for c in np.floor(arr / bin_size))


@dataclass(frozen=True, eq=False)
class LibraryEntry:
    entry_id: int
    key_state: np.ndarray
    segment: Segment


class SegmentLibrary:
    """
    Grid-indexed store of tail segments keyed by their initial state.

    Args:
        bin_size: side length of a bin in every dimension (default: 1.0)
        bin_capacity: maximum entries per bin, oldest evicted first (default: 1000)
        logger: Logger instance to use (default: package logger)
    """

    def __init__(
        self,
        bin_size: float = 1.0,
        bin_capacity: int = 1000,
        logger: Optional[logging.Logger] = None,
    ):
        if not bin_size > 0:
            raise ConfigError(f"bin_size must be positive, got {bin_size}")
        if bin_capacity < 1:
            raise ConfigError(f"bin_capacity must be positive, got {bin_capacity}")
        self.bin_size = float(bin_size)
        self.bin_capacity = int(bin_capacity)
        self.logger = logger or default_logger
        self._bins: Dict[BinKey, Deque[LibraryEntry]] = {}
        self._next_id = 0
        self.evictions = 0

    def __len__(self) -> int:
        return sum(len(b) for b in self._bins.values())

    @property
    def num_bins(self) -> int:
        return len(self._bins)

    def bin_keys(self) -> List[BinKey]:
        return list(self._bins)

    def entries(self, key: Optional[BinKey] = None) -> Iterator[LibraryEntry]:
        """Iterate entries of one bin, or of every bin in creation order."""
        if key is not None:
            yield from self._bins.get(key, ())
            return
        for bin_entries in self._bins.values():
            yield from bin_entries

    def insert(self, key_state: Union[Sequence[float], np.ndarray], seg: Segment) -> LibraryEntry:
        key_arr = np.array(key_state, dtype=np.float64)
        if key_arr.shape != seg.init_state.shape or not np.array_equal(key_arr, seg.init_state):
            raise InvalidInputError("key state must equal the segment's first state")
        key_arr.setflags(write=False)
        key = quantize(key_arr, self.bin_size)
        bin_entries = self._bins.get(key)
        if bin_entries is None:
            bin_entries = self._bins[key] = deque()
        if len(bin_entries) >= self.bin_capacity:
            evicted = bin_entries.popleft()
            self.evictions += 1
            self.logger.debug(f"Bin {key} full, evicted entry {evicted.entry_id}")
        entry = LibraryEntry(self._next_id, key_arr, seg)
        self._next_id += 1
        bin_entries.append(entry)
        return entry

    def get_entries(self, query: Union[Sequence[float], np.ndarray], eps: float) -> List[LibraryEntry]:
        """Entries of the query's bin whose key lies strictly within ``eps``."""
        if eps < 0:
            raise InvalidInputError(f"eps must be non-negative, got {eps}")
        bin_entries = self._bins.get(quantize(query, self.bin_size))
        if not bin_entries:
            return []
        keys = np.stack([e.key_state for e in bin_entries])
        distances = state_distances(query, keys)
        return [e for e, d in zip(bin_entries, distances) if d < eps]

    def get(self, query: Union[Sequence[float], np.ndarray], eps: float) -> List[Segment]:
        return [e.segment for e in self.get_entries(query, eps)]

    def stats(self) -> Dict[str, object]:
        """Bin count, segment count, evictions and an occupancy histogram."""
        occupancy = Counter(len(b) for b in self._bins.values())
        return {
            'bins': self.num_bins,
            'segments': len(self),
            'evictions': self.evictions,
            'bin_size': self.bin_size,
            'bin_capacity': self.bin_capacity,
            'occupancy_histogram': dict(sorted(occupancy.items())),
        }

    def write_stats_csv(self, path: str) -> None:
        """Write one row per bin: ``bin,occupancy``."""
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['bin', 'occupancy'])
            for key, bin_entries in self._bins.items():
                writer.writerow([' '.join(str(c) for c in key), len(bin_entries)])
