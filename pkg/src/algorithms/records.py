"""
Per-round telemetry and run records shared by zooming and the baselines.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

# Column order of per-round CSV logs
LOG_COLUMNS = ['run_id', 't', 'cell', 'anchor', 'outcome', 'value', 'payment', 'utility',
               'zoomed', 'active_cell_count', 'policy']


@dataclass(frozen=True)
class RoundLog:
    """One round as seen by the algorithm."""

    t: int
    cell: str
    anchor: str
    increments: Tuple[float, ...]
    outcome: int
    value: float
    payment: float
    utility: float
    zoomed: bool
    active_cell_count: int


@dataclass
class RunRecord:
    """Everything one seeded run produced."""

    run_id: int
    policy: str
    horizon: int
    m: int
    seed_info: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)
    logs: List[RoundLog] = field(default_factory=list)
    zoom_events: List[Tuple[int, str]] = field(default_factory=list)
    final_active: List[str] = field(default_factory=list)
    coin_flags: List[str] = field(default_factory=list)

    def append(self, log: RoundLog) -> None:
        self.logs.append(log)

    @property
    def utilities(self) -> np.ndarray:
        return np.fromiter((log.utility for log in self.logs), dtype=float, count=len(self.logs))

    @property
    def cumulative_utility(self) -> float:
        return float(self.utilities.sum())

    @property
    def time_averaged_utility(self) -> float:
        """U-hat(T): cumulative utility divided by rounds played."""
        return self.cumulative_utility / len(self.logs) if self.logs else 0.0

    def posted_increments(self) -> np.ndarray:
        """(T, m) array of the contract posted in each round."""
        return np.array([log.increments for log in self.logs], dtype=float).reshape(-1, self.m)

    def running_average(self, checkpoints: Sequence[int]) -> Dict[int, float]:
        """U-hat(t) = cumulative utility / t at each checkpoint t <= rounds played."""
        cumulative = np.cumsum(self.utilities)
        return {t: float(cumulative[t - 1] / t) for t in checkpoints if 1 <= t <= len(cumulative)}

    def window_average(self, fraction: float) -> float:
        """Average utility over the final `fraction` of the rounds."""
        utilities = self.utilities
        width = max(1, int(round(len(utilities) * fraction)))
        return float(utilities[-width:].mean())

    def to_frame(self) -> pd.DataFrame:
        """Per-round log in the CSV schema."""
        rows = [
            {
                'run_id': self.run_id,
                't': log.t,
                'cell': log.cell,
                'anchor': log.anchor,
                'outcome': log.outcome,
                'value': log.value,
                'payment': log.payment,
                'utility': log.utility,
                'zoomed': int(log.zoomed),
                'active_cell_count': log.active_cell_count,
                'policy': self.policy,
            }
            for log in self.logs
        ]
        return pd.DataFrame(rows, columns=LOG_COLUMNS)

    def summary(self) -> Dict[str, Any]:
        return {
            'run_id': self.run_id,
            'policy': self.policy,
            'horizon': self.horizon,
            'rounds': len(self.logs),
            'cumulative_utility': self.cumulative_utility,
            'time_averaged_utility': self.time_averaged_utility,
            'zoom_events': len(self.zoom_events),
            'final_active_cells': len(self.final_active),
            'coin_flags': len(self.coin_flags),
        }


def mean_and_se(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and standard error (0 for a single value)."""
    data = np.asarray(values, dtype=float)
    if len(data) == 0:
        return float('nan'), float('nan')
    se = float(data.std(ddof=1) / np.sqrt(len(data))) if len(data) > 1 else 0.0
    return float(data.mean()), se


def records_frame(records: Sequence[RunRecord], extra: Optional[Dict[str, Any]] = None
                  ) -> pd.DataFrame:
    """Concatenate per-round logs of several runs, sorted by run id."""
    frames = [r.to_frame() for r in sorted(records, key=lambda r: r.run_id)]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=LOG_COLUMNS)
    for key, value in (extra or {}).items():
        frame[key] = value
    return frame
