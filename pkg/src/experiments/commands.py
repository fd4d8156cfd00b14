"""
Experiment commands behind the CLI.

Each command runs its batch, aggregates in a fixed order (algorithm, delta, checkpoint)
and writes CSV outputs plus a metadata JSON under <output_dir>/<command>/.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from src.algorithms.records import mean_and_se, records_frame
from src.analysis.census import FULL_SPACE_OPT_STEP, cell_census
from src.analysis.oracle import opt_search
from src.analysis.regret import run_regret
from src.envs.markets import build_environment
from src.experiments.config import ExperimentConfig
from src.experiments.runner import (
    ALGORITHM_STREAM,
    MARKET_STREAM,
    RunResult,
    build_run,
    build_tasks,
    checkpoint_schedule,
    derive_rng,
    run_batch,
)
from src.export.csv_export import export_frame, export_to_excel, git_revision, write_metadata
from src.mesh.candidates import build_candidate_set
from src.utils.helpers import get_output_dir, resolve_config
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class CommandOutput:
    """Frames a command produced and the files it wrote."""

    command: str
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)


def design_constants(custom_config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Constants whose values are our choice, recorded with every output."""
    config = resolve_config(custom_config)
    return {
        'indifference_band': config['model']['indifference_band'],
        'row_tolerance': config['model']['row_tolerance'],
        'depth_cap': config['mesh']['depth_cap'],
        'zooming': dict(config['zooming']),
        'baselines': dict(config['baselines']),
        'quadrature_abs_tol': config['quadrature']['abs_tol'],
        'census_beta': config['analysis']['beta'],
        'two_type_weights': [0.5, 0.5],
        'unsampled_anchor_width': 0.0,
    }


def build_metadata(command: str, config: ExperimentConfig,
                   custom_config: Optional[Dict[str, Any]] = None,
                   **extra) -> Dict[str, Any]:
    metadata = {
        'command': command,
        'git_revision': git_revision(),
        'config_digest': config.digest,
        'config': config.to_dict(),
        'seeds': {
            'base_seed': config.base_seed,
            'runs': config.runs,
            'derivation': 'SeedSequence(base_seed, spawn_key=(run_id, stream))',
            'streams': {'market': MARKET_STREAM, 'algorithm': ALGORITHM_STREAM},
        },
        'design_constants': design_constants(custom_config),
    }
    metadata.update(extra)
    return metadata


def _write_outputs(output: CommandOutput, config_dir: str, excel: bool = False) -> CommandOutput:
    directory = get_output_dir(config_dir) / output.command
    for name, frame in output.frames.items():
        output.files.append(export_frame(frame, directory / f"{name}.csv"))
    output.files.append(write_metadata(output.metadata, directory / 'metadata.json'))
    if excel:
        output.files.append(export_to_excel(output.frames, directory / f"{output.command}.xlsx",
                                            output.metadata))
    return output


def _grouped(results: Sequence[RunResult], config: ExperimentConfig):
    """Results per (algorithm label, delta), in config order."""
    for entry in config.algorithms:
        label = config.algorithm_label(entry)
        for delta in config.deltas:
            group = [r for r in results if r.algorithm == label and r.delta == delta]
            yield label, delta, sorted(group, key=lambda r: r.run_id)


# ── sweep-delta ─────────────────────────────────────────────

def cmd_sweep_delta(config: ExperimentConfig, custom_config: Optional[Dict[str, Any]] = None,
                    excel: bool = False) -> CommandOutput:
    """Mean time-averaged utility after T rounds, per algorithm and delta."""
    results = run_batch(build_tasks(config, custom_config=custom_config), config.workers)
    rows = []
    for label, delta, group in _grouped(results, config):
        mean, se = mean_and_se([r.time_averaged_utility for r in group])
        rows.append({'algorithm': label, 'delta': delta, 'horizon': config.horizon,
                     'runs': len(group), 'mean_utility': mean, 'se': se})
    output = CommandOutput('sweep_delta', {'summary': pd.DataFrame(rows)},
                           metadata=build_metadata('sweep-delta', config, custom_config))
    _attach_logs(output, results, config)
    return _write_outputs(output, config.output_dir, excel)


# ── over-time ───────────────────────────────────────────────

def cmd_over_time(config: ExperimentConfig, custom_config: Optional[Dict[str, Any]] = None,
                  excel: bool = False) -> CommandOutput:
    """Running average utility at geometric checkpoints, per algorithm and delta."""
    checkpoints = checkpoint_schedule(config.horizon, config.checkpoint_bases,
                                      config.checkpoint_start)
    tasks = build_tasks(config, custom_config=custom_config, checkpoints=checkpoints)
    results = run_batch(tasks, config.workers)
    rows = []
    for label, delta, group in _grouped(results, config):
        for t in checkpoints:
            mean, se = mean_and_se([r.checkpoints[t] for r in group])
            rows.append({'algorithm': label, 'delta': delta, 't': t, 'runs': len(group),
                         'mean_utility': mean, 'se': se})
    metadata = build_metadata('over-time', config, custom_config, checkpoints=checkpoints)
    output = CommandOutput('over_time', {'time_series': pd.DataFrame(rows)}, metadata=metadata)
    _attach_logs(output, results, config)
    return _write_outputs(output, config.output_dir, excel)


# ── limit-opt ───────────────────────────────────────────────

def cmd_limit_opt(config: ExperimentConfig, custom_config: Optional[Dict[str, Any]] = None,
                  excel: bool = False) -> CommandOutput:
    """Average utility over the final window of a long run, a proxy for OPT per delta."""
    tasks = build_tasks(config, horizon=config.limit_horizon, custom_config=custom_config)
    results = run_batch(tasks, config.workers)
    rows = []
    for label, delta, group in _grouped(results, config):
        mean, se = mean_and_se([r.window_average for r in group])
        rows.append({'algorithm': label, 'delta': delta, 'horizon': config.limit_horizon,
                     'window_fraction': config.window_fraction, 'runs': len(group),
                     'window_mean': mean, 'se': se})
    output = CommandOutput('limit_opt', {'limit': pd.DataFrame(rows)},
                           metadata=build_metadata('limit-opt', config, custom_config))
    _attach_logs(output, results, config)
    return _write_outputs(output, config.output_dir, excel)


# ── run ─────────────────────────────────────────────────────

def cmd_run(config: ExperimentConfig, custom_config: Optional[Dict[str, Any]] = None,
            excel: bool = False) -> CommandOutput:
    """
    Fully logged runs with per-run regret against the exact OPT of the candidate set.

    Per-round logs are always kept here; the regret columns come from the oracle and
    badness routes, which must agree.
    """
    config.per_round_logs = True
    tasks = build_tasks(config, custom_config=custom_config)
    results = run_batch(tasks, config.workers)

    rows = []
    opt_cache: Dict[tuple, float] = {}
    for task, result in zip(tasks, results):
        env, candidates = build_run(task)
        key = (task.run_id, task.delta)
        if key not in opt_cache:
            opt_cache[key] = opt_search(env, candidates, FULL_SPACE_OPT_STEP).utility
        routes = run_regret(result.record, env, opt_cache[key])
        row = result.summary_row()
        row.update(opt=opt_cache[key], regret=routes['oracle'], badness_regret=routes['badness'],
                   realized_regret=routes['realized'])
        rows.append(row)

    output = CommandOutput('run', {'summary': pd.DataFrame(rows)},
                           metadata=build_metadata('run', config, custom_config))
    _attach_logs(output, results, config)
    return _write_outputs(output, config.output_dir, excel)


def _attach_logs(output: CommandOutput, results: Sequence[RunResult],
                 config: ExperimentConfig) -> None:
    """Per-round log frames, one per (algorithm, delta), when logs were kept."""
    if not config.per_round_logs:
        return
    for label, delta, group in _grouped(results, config):
        records = [r.record for r in group if r.record is not None]
        if records:
            output.frames[f"logs_{label}_{delta:g}"] = records_frame(records, {'delta': delta})


# ── census ──────────────────────────────────────────────────

def cmd_census(environment: Dict[str, Any], candidates: Dict[str, Any], max_depth: int,
               eps_list: Optional[Sequence[float]] = None, beta: Optional[float] = None,
               output_dir: Optional[str] = None, base_seed: int = 0,
               custom_config: Optional[Dict[str, Any]] = None) -> CommandOutput:
    """Feasible-cell census with N_eps counts and the width-dimension fit."""
    env = build_environment(environment, derive_rng(base_seed, 0, MARKET_STREAM), custom_config)
    candidate_set = build_candidate_set(candidates, custom_config)
    result = cell_census(env, candidate_set, max_depth, eps_list, beta, custom_config)

    metadata = {
        'command': 'census',
        'git_revision': git_revision(),
        'environment': environment,
        'candidates': candidate_set.describe(),
        'max_depth': max_depth,
        'beta': result.beta,
        'opt': result.opt,
        'opt_grid_step': result.opt_step,
        'fit': result.fit,
        'monotone_counts': result.monotone,
        'flags': result.flags,
        'design_constants': design_constants(custom_config),
    }
    output = CommandOutput('census', {'census': result.to_frame(),
                                      'counts': result.counts_frame()}, metadata=metadata)
    output_dir = output_dir or resolve_config(custom_config)['experiments']['output_dir']
    _write_outputs(output, output_dir)
    output.files.append(write_metadata(result.fit, get_output_dir(output_dir) / 'census' /
                                       'width_dimension.json'))
    return output
