"""
Desk-scale verification suites.

Each suite returns a SuiteVerdict; `cmd_verify` runs a selection of them, writes the
verdicts as JSON and reports overall success. Sizes come from the `verify` config section.
"""

import hashlib
import math
import time
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.algorithms.records import RunRecord, mean_and_se, records_frame
from src.algorithms.zooming import InvariantViolation, ZoomConfig, ZoomingAlgorithm
from src.analysis.census import cell_census
from src.analysis.checks import (
    MARGIN_TOLERANCE,
    clean_execution_rate,
    discretization_check,
    high_low_identity,
    inventory_width_sweep,
    nonmonotone_check,
    random_fosd_instance,
    random_task_pricing,
    ucb_sanity,
    verify_width_bound,
    width_bound_spot_check,
)
from src.analysis.regret import regret_report
from src.envs.markets import make_uniform_market
from src.envs.supply import FiniteMixture, HighLowParametric, uniform_cost
from src.experiments.config import load_experiment_config
from src.experiments.runner import ALGORITHM_STREAM, build_tasks, derive_rng, run_batch
from src.export.csv_export import write_metadata
from src.mesh.candidates import FullSpace, UniformMesh
from src.model.contracts import OutcomeSpace
from src.model.worker import high_low_type
from src.utils.helpers import get_output_dir, resolve_config
from src.utils.logger import get_logger

logger = get_logger(__name__)

GOLDEN_FILE = 'zooming_golden.sha256'
CLEAN_EXECUTION_LIMIT = 0.05
NONMONOTONE_TOLERANCE = 0.01


@dataclass
class SuiteVerdict:
    name: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class VerifyReport:
    verdicts: List[SuiteVerdict]
    files: List[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> Dict[str, Any]:
        return {'passed': self.passed, 'suites': [asdict(v) for v in self.verdicts]}


class VerifyContext:
    """Settings shared by the suites of one verify invocation."""

    def __init__(self, custom_config: Optional[Dict[str, Any]] = None,
                 golden_dir: Optional[str] = None):
        self.custom_config = custom_config
        self.config = resolve_config(custom_config)
        self.settings = self.config['verify']
        self.seed = int(self.config['experiments']['base_seed'])
        self.golden_dir = Path(golden_dir or self.settings['golden_dir'])
        if not self.golden_dir.is_absolute():
            self.golden_dir = Path(__file__).parent.parent.parent / self.golden_dir
        self.invariant_records: List = []

    def rng(self, stream: int) -> np.random.Generator:
        return derive_rng(self.seed, 0, stream)


def v_low_zero_markets(custom_config: Optional[Dict[str, Any]] = None) -> List:
    """Three high-low markets with v(low) = 0: uniform costs, homogeneous, two types."""
    theta = float(resolve_config(custom_config)['markets']['theta_h'])
    outcomes = OutcomeSpace((0.0, 0.0, 1.0))
    return [
        HighLowParametric(uniform_cost(), theta_h=theta, values=outcomes.values,
                          custom_config=custom_config),
        FiniteMixture(outcomes, [high_low_type(0.3, theta)], [1.0], custom_config),
        FiniteMixture(outcomes, [high_low_type(0.2, theta), high_low_type(0.9, theta)],
                      [0.5, 0.5], custom_config),
    ]


# ── Suites ──────────────────────────────────────────────────

def suite_width_bound(ctx: VerifyContext) -> SuiteVerdict:
    trials, cells = int(ctx.settings['width_trials']), int(ctx.settings['width_cells'])
    divisions = int(ctx.config['analysis']['width_grid_divisions'])
    generator = partial(random_fosd_instance, custom_config=ctx.custom_config)
    fosd = verify_width_bound(generator, trials, cells, divisions, ctx.rng(1))
    pricing = verify_width_bound(random_task_pricing, max(1, trials // 4), cells, divisions,
                                 ctx.rng(2), max_depth=6)
    return SuiteVerdict('width_bound', fosd.passed and pricing.passed, {
        'fosd': asdict(fosd), 'task_pricing': asdict(pricing)})


def suite_inventory_width(ctx: VerifyContext) -> SuiteVerdict:
    report = inventory_width_sweep(int(ctx.settings['inventory_curves']),
                                   int(ctx.settings['inventory_cells']),
                                   int(ctx.config['analysis']['width_grid_divisions']),
                                   ctx.rng(3))
    return SuiteVerdict('inventory_width', report.passed, asdict(report))


def suite_high_low_identity(ctx: VerifyContext) -> SuiteVerdict:
    worst = high_low_identity(int(ctx.settings['identity_contracts']), ctx.rng(4))
    tolerance = float(ctx.config['analysis']['identity_tolerance'])
    return SuiteVerdict('high_low_identity', worst <= tolerance,
                        {'worst_error': worst, 'tolerance': tolerance})


def suite_discretization(ctx: VerifyContext) -> SuiteVerdict:
    rows = discretization_check(ctx.settings['discretization_deltas'],
                                int(ctx.settings['discretization_fine_divisor']),
                                v_low_zero_markets(ctx.custom_config))
    return SuiteVerdict('discretization', all(r['passed'] for r in rows), {'rows': rows})


def suite_nonmonotone(ctx: VerifyContext) -> SuiteVerdict:
    result = nonmonotone_check()
    payments = result['unrestricted_payments']
    tol = NONMONOTONE_TOLERANCE
    passed = (abs(result['unrestricted_utility'] - 0.6) <= tol
              and abs(result['monotone_utility'] - 0.5) <= tol
              and abs(payments[2] - 0.4) <= tol
              and abs(payments[1]) <= tol and abs(payments[3]) <= tol
              and result['unrestricted_utility'] > result['monotone_utility'])
    return SuiteVerdict('nonmonotone', passed, result)


def _uniform_zooming_runs(ctx: VerifyContext, runs: int, horizon: int, delta: float,
                          debug_asserts: bool) -> List[Tuple[ZoomingAlgorithm, RunRecord]]:
    env = make_uniform_market(ctx.custom_config)
    candidates = UniformMesh(delta)
    cfg = ZoomConfig.from_config(horizon, ctx.custom_config, debug_asserts=debug_asserts)
    runs_played = []
    for run_id in range(runs):
        algorithm = ZoomingAlgorithm(env, candidates, cfg)
        rng = derive_rng(ctx.seed, run_id, ALGORITHM_STREAM)
        runs_played.append((algorithm, algorithm.run(rng, run_id)))
    return runs_played


def suite_invariants(ctx: VerifyContext) -> SuiteVerdict:
    runs = int(ctx.settings['invariant_runs'])
    try:
        played = _uniform_zooming_runs(ctx, runs, int(ctx.settings['invariant_horizon']),
                                       float(ctx.settings['invariant_delta']), True)
    except InvariantViolation as error:
        return SuiteVerdict('invariants', False, {
            'round': error.round_number, 'cell': str(error.cell), 'message': str(error)})
    ctx.invariant_records = [record for _, record in played]
    return SuiteVerdict('invariants', True, {
        'runs': runs, 'zoom_events': sum(len(record.zoom_events) for _, record in played)})


def suite_regret_identity(ctx: VerifyContext) -> SuiteVerdict:
    delta = float(ctx.settings['invariant_delta'])
    records = ctx.invariant_records
    if not records:
        played = _uniform_zooming_runs(ctx, 5, int(ctx.settings['invariant_horizon']),
                                       delta, False)
        records = [record for _, record in played]
    report = regret_report(records, make_uniform_market(ctx.custom_config), UniformMesh(delta))
    return SuiteVerdict('regret_identity', report.max_route_gap <= MARGIN_TOLERANCE,
                        report.summary())


def suite_delta_sweep(ctx: VerifyContext) -> SuiteVerdict:
    deltas = [float(d) for d in ctx.settings['sweep_deltas']]
    config = load_experiment_config({
        'environment': {'market': 'uniform'},
        'algorithms': [{'kind': 'zooming'}, {'kind': 'ucb1_constant'}],
        'deltas': deltas,
        'horizon': int(ctx.settings['sweep_horizon']),
        'runs': int(ctx.settings['sweep_runs']),
        'per_round_logs': False,
    }, ctx.custom_config)
    results = run_batch(build_tasks(config, custom_config=ctx.custom_config), config.workers)

    rows, passed = [], True
    for delta in deltas:
        zoom = mean_and_se([r.time_averaged_utility for r in results
                            if r.algorithm == 'zooming' and r.delta == delta])
        ucb = mean_and_se([r.time_averaged_utility for r in results
                           if r.algorithm == 'ucb1_constant' and r.delta == delta])
        combined = math.hypot(zoom[1], ucb[1])
        ok = zoom[0] >= ucb[0] - 2 * combined
        if delta == min(deltas):
            ok = ok and zoom[0] - ucb[0] >= 3 * combined
        passed = passed and ok
        rows.append({'delta': delta, 'zooming_mean': zoom[0], 'zooming_se': zoom[1],
                     'ucb1_constant_mean': ucb[0], 'ucb1_constant_se': ucb[1],
                     'combined_se': combined, 'passed': ok})
    return SuiteVerdict('delta_sweep', passed, {'rows': rows})


def suite_census(ctx: VerifyContext) -> SuiteVerdict:
    env = v_low_zero_markets(ctx.custom_config)[0]
    result = cell_census(env, FullSpace(custom_config=ctx.custom_config),
                         int(ctx.settings['census_max_depth']),
                         custom_config=ctx.custom_config)
    # slope and monotonicity are flagged only
    passed = result.worst_margin >= -MARGIN_TOLERANCE
    return SuiteVerdict('census', passed, {
        'cells': len(result.rows), 'worst_margin': result.worst_margin, 'fit': result.fit,
        'counts': {str(k): v for k, v in result.counts.items()}, 'flags': result.flags})


def suite_ucb_sanity(ctx: VerifyContext) -> SuiteVerdict:
    regret, bound = ucb_sanity(int(ctx.settings['ucb_horizon']), int(ctx.settings['ucb_seeds']),
                               custom_config=ctx.custom_config)
    return SuiteVerdict('ucb_sanity', regret < bound, {'mean_regret': regret, 'bound': bound})


def suite_clean_execution(ctx: VerifyContext) -> SuiteVerdict:
    rate = clean_execution_rate(make_uniform_market(ctx.custom_config),
                                UniformMesh(float(ctx.settings['invariant_delta'])),
                                int(ctx.settings['invariant_runs']),
                                int(ctx.settings['invariant_horizon']), ctx.seed,
                                ctx.custom_config)
    return SuiteVerdict('clean_execution', rate < CLEAN_EXECUTION_LIMIT,
                        {'violation_rate': rate, 'limit': CLEAN_EXECUTION_LIMIT})


def suite_width_spot(ctx: VerifyContext) -> SuiteVerdict:
    played = _uniform_zooming_runs(ctx, 3, int(ctx.settings['golden_horizon']),
                                   float(ctx.settings['invariant_delta']), False)
    divisions = int(ctx.config['analysis']['width_grid_divisions'])
    worst = min(width_bound_spot_check(algorithm, divisions) for algorithm, _ in played)
    return SuiteVerdict('width_spot', worst >= -MARGIN_TOLERANCE, {'worst_margin': worst})


def golden_digest(custom_config: Optional[Dict[str, Any]] = None) -> str:
    """sha256 of the per-round CSV of the fixed-seed zooming run."""
    settings = resolve_config(custom_config)['verify']
    env = make_uniform_market(custom_config)
    cfg = ZoomConfig.from_config(int(settings['golden_horizon']), custom_config)
    algorithm = ZoomingAlgorithm(env, UniformMesh(float(settings['invariant_delta'])), cfg)
    record = algorithm.run(np.random.default_rng(int(settings['golden_seed'])))
    text = records_frame([record]).to_csv(index=False)
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def suite_golden(ctx: VerifyContext) -> SuiteVerdict:
    digest = golden_digest(ctx.custom_config)
    path = ctx.golden_dir / GOLDEN_FILE
    if not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(digest + '\n')
        logger.warning(f"Golden digest recorded for the first time at {path}")
        return SuiteVerdict('golden', True, {'digest': digest, 'recorded': True})
    expected = path.read_text().strip()
    if digest != expected:
        logger.error(f"Golden run diverged: {digest} != {expected}")
    return SuiteVerdict('golden', digest == expected,
                        {'digest': digest, 'expected': expected, 'recorded': False})


SUITES: Dict[str, Callable[[VerifyContext], SuiteVerdict]] = {
    'width_bound': suite_width_bound,
    'inventory_width': suite_inventory_width,
    'high_low_identity': suite_high_low_identity,
    'discretization': suite_discretization,
    'nonmonotone': suite_nonmonotone,
    'invariants': suite_invariants,
    'regret_identity': suite_regret_identity,
    'delta_sweep': suite_delta_sweep,
    'census': suite_census,
    'ucb_sanity': suite_ucb_sanity,
    'clean_execution': suite_clean_execution,
    'width_spot': suite_width_spot,
    'golden': suite_golden,
}


def cmd_verify(selected: Optional[Sequence[str]] = None,
               custom_config: Optional[Dict[str, Any]] = None,
               output_dir: Optional[str] = None,
               golden_dir: Optional[str] = None) -> VerifyReport:
    """
    Run the selected suites (all when `selected` is None) and write verdicts.json.

    Raises:
        ValueError: on an empty selection or an unknown suite name
    """
    names = list(SUITES) if selected is None else list(selected)
    if not names:
        raise ValueError("no suites selected")
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"Unknown suites: {', '.join(unknown)}; "
                         f"expected some of {', '.join(SUITES)}")

    ctx = VerifyContext(custom_config, golden_dir)
    verdicts = []
    for name in names:
        logger.info(f"Verify suite '{name}' starting")
        started = time.perf_counter()
        verdict = SUITES[name](ctx)
        verdict.seconds = time.perf_counter() - started
        level = logger.info if verdict.passed else logger.error
        level(f"Verify suite '{name}': {'PASS' if verdict.passed else 'FAIL'} "
              f"({verdict.seconds:.1f}s)")
        verdicts.append(verdict)

    report = VerifyReport(verdicts)
    directory = get_output_dir(output_dir or ctx.config['experiments']['output_dir']) / 'verify'
    report.files.append(write_metadata(report.to_dict(), directory / 'verdicts.json'))
    return report
