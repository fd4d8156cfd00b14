"""
Seeded multi-run execution.

Every run gets two private streams derived from (base seed, run id): stream 0 draws the
market (run k of every algorithm sees the same market), stream 1 drives the algorithm
and the workers. Tasks are plain picklable data; the environment is rebuilt inside the
worker process and results are merged in task order.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.algorithms.baselines import nonadaptive_run
from src.algorithms.records import RunRecord
from src.algorithms.zooming import ZoomConfig, ZoomingAlgorithm
from src.envs.markets import build_environment
from src.envs.supply import SupplyModel
from src.experiments.config import ExperimentConfig, zoom_overrides
from src.mesh.candidates import CandidateSet, build_candidate_set
from src.utils.logger import configure_worker_logging, get_logger

logger = get_logger(__name__)

MARKET_STREAM = 0
ALGORITHM_STREAM = 1


def derive_rng(base_seed: int, run_id: int, stream: int) -> np.random.Generator:
    """Independent generator for one (run, stream) pair."""
    sequence = np.random.SeedSequence(base_seed, spawn_key=(run_id, stream))
    return np.random.default_rng(sequence)


def checkpoint_schedule(horizon: int, bases: Sequence[int] = (1, 2),
                        start: int = 10) -> List[int]:
    """Checkpoints b * 10^k (b in bases) from `start` up to the horizon, plus the horizon."""
    points = set()
    scale = 1
    while scale <= horizon:
        for base in bases:
            point = base * scale
            if start <= point <= horizon:
                points.add(point)
        scale *= 10
    points.add(horizon)
    return sorted(points)


@dataclass(frozen=True)
class RunTask:
    """One seeded run of one algorithm on one candidate set."""

    environment: Dict[str, Any]
    algorithm: Dict[str, Any]
    label: str
    candidates: Dict[str, Any]
    horizon: int
    run_id: int
    base_seed: int
    keep_logs: bool = False
    debug_asserts: bool = False
    checkpoints: Sequence[int] = ()
    window_fraction: float = 0.1
    custom_config: Optional[Dict[str, Any]] = None

    @property
    def delta(self) -> Optional[float]:
        return self.candidates.get('delta')


@dataclass
class RunResult:
    """Summary of one run, plus its full record when per-round logs are kept."""

    run_id: int
    algorithm: str
    delta: Optional[float]
    horizon: int
    time_averaged_utility: float
    cumulative_utility: float
    window_average: float
    checkpoints: Dict[int, float] = field(default_factory=dict)
    zoom_events: int = 0
    final_active_cells: int = 0
    coin_flags: int = 0
    seed_info: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)
    record: Optional[RunRecord] = None

    def summary_row(self) -> Dict[str, Any]:
        return {
            'algorithm': self.algorithm,
            'delta': self.delta,
            'run_id': self.run_id,
            'horizon': self.horizon,
            'time_averaged_utility': self.time_averaged_utility,
            'cumulative_utility': self.cumulative_utility,
            'window_average': self.window_average,
            'zoom_events': self.zoom_events,
            'final_active_cells': self.final_active_cells,
            'coin_flags': self.coin_flags,
        }


def build_run(task: RunTask) -> tuple:
    """Environment and candidate set of a task, the market drawn from stream 0."""
    market_rng = derive_rng(task.base_seed, task.run_id, MARKET_STREAM)
    env = build_environment(task.environment, market_rng, task.custom_config)
    candidates = build_candidate_set(task.candidates, task.custom_config)
    return env, candidates


def play(task: RunTask, env: SupplyModel, candidates: CandidateSet,
         on_round=None) -> RunRecord:
    """Run the task's algorithm on an already built environment."""
    rng = derive_rng(task.base_seed, task.run_id, ALGORITHM_STREAM)
    kind = task.algorithm['kind']
    if kind == 'zooming':
        cfg = ZoomConfig.from_config(task.horizon, task.custom_config,
                                     debug_asserts=task.debug_asserts or None,
                                     **zoom_overrides(task.algorithm))
        record = ZoomingAlgorithm(env, candidates, cfg, on_round).run(rng, task.run_id)
    else:
        record = nonadaptive_run(env, candidates, kind, task.horizon, rng, task.run_id,
                                 task.custom_config)
    record.policy = task.label
    record.seed_info = {'base_seed': task.base_seed, 'run_id': task.run_id,
                        'streams': {'market': MARKET_STREAM, 'algorithm': ALGORITHM_STREAM}}
    return record


def execute_task(task: RunTask) -> RunResult:
    """Run one task end to end; safe to call in a worker process."""
    env, candidates = build_run(task)
    record = play(task, env, candidates)
    return RunResult(
        run_id=task.run_id,
        algorithm=task.label,
        delta=task.delta,
        horizon=task.horizon,
        time_averaged_utility=record.time_averaged_utility,
        cumulative_utility=record.cumulative_utility,
        window_average=record.window_average(task.window_fraction),
        checkpoints=record.running_average(task.checkpoints),
        zoom_events=len(record.zoom_events),
        final_active_cells=len(record.final_active),
        coin_flags=len(record.coin_flags),
        seed_info=record.seed_info,
        metadata=record.metadata,
        record=record if task.keep_logs else None,
    )


def build_tasks(config: ExperimentConfig, horizon: Optional[int] = None,
                custom_config: Optional[Dict[str, Any]] = None,
                checkpoints: Sequence[int] = ()) -> List[RunTask]:
    """Every (algorithm, delta, run) combination of an experiment, in a fixed order."""
    horizon = horizon or config.horizon
    tasks = []
    for entry in config.algorithms:
        for delta in config.deltas:
            candidates = {'name': config.candidates, 'delta': delta}
            for run_id in range(config.runs):
                tasks.append(RunTask(
                    environment=config.environment,
                    algorithm=entry,
                    label=config.algorithm_label(entry),
                    candidates=candidates,
                    horizon=horizon,
                    run_id=run_id,
                    base_seed=config.base_seed,
                    keep_logs=config.per_round_logs,
                    debug_asserts=config.debug_asserts,
                    checkpoints=tuple(checkpoints),
                    window_fraction=config.window_fraction,
                    custom_config=custom_config,
                ))
    return tasks


def run_batch(tasks: Sequence[RunTask], workers: int = 1) -> List[RunResult]:
    """
    Execute tasks, in parallel when workers > 1.

    Results come back in task order whatever the scheduling.
    """
    logger.info(f"Running {len(tasks)} tasks on {workers} worker(s)")
    if workers <= 1:
        results = [execute_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=configure_worker_logging,
                                 initargs=(logging.getLogger().getEffectiveLevel(),)) as executor:
            results = list(executor.map(execute_task, tasks))
    logger.info(f"Finished {len(results)} runs")
    return results
