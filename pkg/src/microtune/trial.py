"""Trial records: the outcome of evaluating one configuration."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum

from .errors import MicrotuneError
from .space import Configuration
from .tracing import TrialStats


class TrialStatus(str, Enum):
    COMPLETE = "complete"
    INCOMPLETE = "incomplete"


@dataclass(frozen=True)
class Trial:
    """One evaluated configuration.

    ``trial_id`` is sequential within a run (the baseline trial is 1).
    Incomplete trials carry a machine-readable ``reason``; stats are present
    whenever at least one post-warmup sample was collected.
    """

    trial_id: int
    config_index: int
    configuration: Configuration
    status: TrialStatus
    stats: TrialStats | None
    started_at: datetime
    finished_at: datetime
    elapsed_s: float
    reason: str | None = None
    baseline: bool = False

    def __post_init__(self) -> None:
        if self.elapsed_s < 0:
            raise MicrotuneError("trial elapsed time must be >= 0")
        if self.status is TrialStatus.COMPLETE:
            if self.stats is None:
                raise MicrotuneError("complete trial must carry stats")
            if self.reason is not None:
                raise MicrotuneError("complete trial cannot carry a failure reason")
        elif not self.reason:
            raise MicrotuneError("incomplete trial must carry a reason")

    @property
    def complete(self) -> bool:
        return self.status is TrialStatus.COMPLETE

    @property
    def mean_s(self) -> float | None:
        return self.stats.mean_s if self.stats is not None else None
