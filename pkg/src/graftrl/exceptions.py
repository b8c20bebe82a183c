"""
Exception hierarchy for graftrl.

Low-level functions raise these; orchestration code logs them with context
and re-raises; the CLI turns them into an exit status.
"""

from typing import Any, Dict, List, Optional


class GraftError(Exception):
    """Base class for every error raised by graftrl."""


class InvalidInputError(GraftError, ValueError):
    """An argument violates an operation's precondition."""


class DimensionError(InvalidInputError):
    """Vectors or distributions have mismatched lengths."""


class ConfigError(GraftError, ValueError):
    """A configuration value is missing, unknown or out of range."""


class NotReadyError(GraftError):
    """A replay buffer holds fewer transitions than its warmup size."""


class ProtocolError(GraftError, RuntimeError):
    """An environment was stepped after its episode finished."""


class UndefinedBaselineError(GraftError, ZeroDivisionError):
    """AUC improvement requested against a zero-area baseline."""


class TrainingDivergedError(GraftError, RuntimeError):
    """A loss became non-finite during a gradient step.

    ``diagnostics`` holds the numbers that were in play when the step blew
    up. Once the error leaves a training loop, ``run_log`` carries the
    episodes completed so far.
    """

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})
        self.run_log: Any = None


class RunAbortedError(GraftError):
    """One or more seeded runs of an experiment aborted."""

    def __init__(self, message: str, reports: Optional[List[Any]] = None):
        super().__init__(message)
        self.reports: List[Any] = list(reports or [])
