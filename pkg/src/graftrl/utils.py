"""
Utility functions for graftrl.

Provides logging setup, config hashing and seeded random streams.
"""

import hashlib
import json
import logging
from typing import Any, Dict, List, Mapping

import numpy as np


default_logger = logging.getLogger('graftrl')
default_logger.setLevel(logging.DEBUG)
if not default_logger.handlers:
    handler = logging.StreamHandler()
    formatter = logging.Formatter('%(levelname)s: %(name)s - %(message)s')
    handler.setFormatter(formatter)
    default_logger.addHandler(handler)


def calculate_config_hash(config: Mapping[str, Any]) -> str:
    """Calculate a stable hash of a flat configuration mapping."""
    content = json.dumps(_jsonable(config), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(content.encode()).hexdigest()


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


# Order matters: adding a stream at the end keeps older streams unchanged.
STREAM_NAMES = ('init', 'env', 'explore', 'sample', 'graft', 'tutor')


def spawn_streams(seed: int) -> Dict[str, np.random.Generator]:
    """Derive one independent generator per named concern from a run seed."""
    children: List[np.random.SeedSequence] = np.random.SeedSequence(seed).spawn(
        len(STREAM_NAMES)
    )
    return {
        name: np.random.default_rng(child)
        for name, child in zip(STREAM_NAMES, children)
    }


def format_float(value: float) -> str:
    """Render a float so that it round-trips exactly through text."""
    return repr(float(value))
