"""
Regret accounting over logged runs.

Regret against the best candidate is computed two ways that must agree:
  - oracle route:  T * OPT - sum_t U(x_t)
  - badness route: sum over distinct posted contracts of n(x) * (OPT - U(x))
plus the realized-utility regret T * OPT - sum_t u_t with its standard error.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.algorithms.records import RunRecord, mean_and_se
from src.analysis.oracle import OptResult, opt_search
from src.envs.supply import SupplyModel
from src.mesh.candidates import CandidateSet
from src.model.contracts import increments_to_payments
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class RegretReport:
    """Regret and utility summaries of runs sharing one environment and candidate set."""

    opt: float
    horizon: int
    policy: str
    oracle_regret: List[float] = field(default_factory=list)
    badness_regret: List[float] = field(default_factory=list)
    realized_regret: List[float] = field(default_factory=list)
    time_averaged: List[float] = field(default_factory=list)

    @property
    def max_route_gap(self) -> float:
        """Largest disagreement between the two exact routes over all runs."""
        gaps = np.abs(np.subtract(self.oracle_regret, self.badness_regret))
        return float(gaps.max()) if len(gaps) else 0.0

    def summary(self) -> Dict[str, Any]:
        oracle_mean, oracle_se = mean_and_se(self.oracle_regret)
        realized_mean, realized_se = mean_and_se(self.realized_regret)
        avg_mean, avg_se = mean_and_se(self.time_averaged)
        return {
            'policy': self.policy,
            'horizon': self.horizon,
            'runs': len(self.oracle_regret),
            'opt': self.opt,
            'regret_mean': oracle_mean,
            'regret_se': oracle_se,
            'realized_regret_mean': realized_mean,
            'realized_regret_se': realized_se,
            'time_averaged_mean': avg_mean,
            'time_averaged_se': avg_se,
            'route_gap': self.max_route_gap,
        }


def run_regret(record: RunRecord, env: SupplyModel, opt: float) -> Dict[str, float]:
    """Oracle, badness and realized regret of one run."""
    posted = record.posted_increments()
    horizon = len(posted)
    exact = env.utility_batch(increments_to_payments(posted))

    unique, counts = np.unique(posted, axis=0, return_counts=True)
    badness = opt - env.utility_batch(increments_to_payments(unique))

    return {
        'oracle': horizon * opt - float(exact.sum()),
        'badness': float(np.dot(counts, badness)),
        'realized': horizon * opt - record.cumulative_utility,
    }


def regret_report(runs: Sequence[RunRecord], env: SupplyModel,
                  candidates: Optional[CandidateSet] = None,
                  opt: Optional[OptResult] = None,
                  grid_step: Optional[float] = None) -> RegretReport:
    """
    Regret of every run against OPT over the candidate set.

    Raises:
        ValueError: if the runs disagree on horizon, dimension or policy
    """
    if not runs:
        raise ValueError("No runs to report on")
    first = runs[0]
    for record in runs[1:]:
        if (record.horizon, record.m, record.policy) != (first.horizon, first.m, first.policy):
            raise ValueError(
                f"Run {record.run_id} metadata ({record.horizon}, {record.m}, {record.policy}) "
                f"differs from run {first.run_id} ({first.horizon}, {first.m}, {first.policy})"
            )
        if record.metadata.get('candidates') != first.metadata.get('candidates'):
            raise ValueError(f"Run {record.run_id} used a different candidate set")
    if first.m != env.m:
        raise ValueError(f"Runs have m={first.m}, environment has m={env.m}")

    if opt is None:
        opt = opt_search(env, candidates, grid_step)

    report = RegretReport(opt=opt.utility, horizon=first.horizon, policy=first.policy)
    for record in sorted(runs, key=lambda r: r.run_id):
        routes = run_regret(record, env, opt.utility)
        report.oracle_regret.append(routes['oracle'])
        report.badness_regret.append(routes['badness'])
        report.realized_regret.append(routes['realized'])
        report.time_averaged.append(record.time_averaged_utility)

    logger.info(f"Regret of {first.policy} over {len(runs)} runs: "
                f"{report.summary()['regret_mean']:.3f} (route gap {report.max_route_gap:.2e})")
    return report
