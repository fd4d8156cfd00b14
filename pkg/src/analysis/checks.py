"""
Property checks built on the exact oracles.

Random instance generators, the width <= virtual width sweeps, the high-low closed-form
identity, the discretization bound, the non-monotone optimum, the clean-execution rate
of zooming and a UCB1 regret sanity check.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.algorithms.baselines import BanditPolicy, run_policy
from src.algorithms.zooming import SELECTION, ZoomingAlgorithm, ZoomConfig, confidence_radius
from src.analysis.oracle import (
    exact_virtual_width,
    exact_width,
    opt_search,
    opt_search_payments,
)
from src.envs.markets import (
    make_inventory_env,
    make_nonmonotone_example,
    make_piecewise_uniform_taskpricing,
)
from src.envs.supply import (
    FiniteMixture,
    HighLowParametric,
    PiecewiseLinearCurve,
    SupplyModel,
)
from src.mesh.candidates import CandidateSet, FullSpace, UniformMesh
from src.mesh.cells import Cell, quadrants
from src.mesh.discretization import discretization_error
from src.model.contracts import Contract, OutcomeSpace
from src.model.worker import WorkerType, high_low_type, validate_type
from src.utils.helpers import resolve_config
from src.utils.logger import get_logger

logger = get_logger(__name__)

MARGIN_TOLERANCE = 1e-9


# ── Instance generators ────────────────────────────────────

def random_fosd_type(rng: np.random.Generator, m: int, efforts: int) -> WorkerType:
    """
    A random worker type whose efforts form a strict FOSD chain.

    Effort 1 spreads mass over outcomes 1..m; each next effort mixes the previous row
    with its one-step upward shift, which strictly dominates it. Costs increase.
    """
    rows = [np.eye(m + 1)[0]]
    row = np.concatenate(([0.0], rng.dirichlet(np.ones(m))))
    for _ in range(1, efforts):
        rows.append(row)
        shifted = np.concatenate(([0.0, 0.0], row[1:-1]))
        shifted[-1] += row[-1]
        alpha = rng.uniform(0.2, 0.8)
        row = (1 - alpha) * row + alpha * shifted
    costs = np.concatenate(([0.0], np.cumsum(rng.uniform(0.0, 0.3, efforts - 1))))
    return WorkerType(costs=costs, production=np.array(rows))


def checked_mixture(outcomes: OutcomeSpace, types: Sequence[WorkerType],
                    weights: Sequence[float],
                    custom_config: Optional[Dict[str, Any]] = None) -> FiniteMixture:
    """
    FiniteMixture of types that pass validate_type, rows checked to model.row_tolerance.

    Raises:
        ValueError: naming the first invalid type and its first violation
    """
    tolerance = float(resolve_config(custom_config)['model']['row_tolerance'])
    for i, worker in enumerate(types):
        report = validate_type(worker, tolerance)
        if not report.ok:
            raise ValueError(f"Type {i} rejected: {report.message}")
    return FiniteMixture(outcomes, types, weights, custom_config)


def random_fosd_instance(rng: np.random.Generator, max_m: int = 3, max_efforts: int = 4,
                         max_types: int = 5,
                         custom_config: Optional[Dict[str, Any]] = None) -> FiniteMixture:
    """Random FOSD-valid finite mixture: m, effort count and type count drawn uniformly."""
    m = int(rng.integers(1, max_m + 1))
    # with one non-null outcome only a single non-null effort can be strictly ordered
    efforts = 2 if m == 1 else int(rng.integers(2, max_efforts + 1))
    count = int(rng.integers(1, max_types + 1))
    values = np.concatenate(([0.0], np.sort(rng.uniform(0.0, 1.0, m))))
    types = [random_fosd_type(rng, m, efforts) for _ in range(count)]
    weights = rng.dirichlet(np.ones(count))
    weights[-1] = 1.0 - weights[:-1].sum()
    return checked_mixture(OutcomeSpace(tuple(values)), types, weights, custom_config)


def random_task_pricing(rng: np.random.Generator, max_pieces: int = 4) -> SupplyModel:
    """Task pricing with a random k-piecewise-uniform cost distribution and v in [0.5, 1]."""
    pieces = int(rng.integers(1, max_pieces + 1))
    inner = np.sort(rng.uniform(0.05, 0.95, pieces - 1))
    breakpoints = np.concatenate(([0.0], inner, [1.0]))
    mass = rng.dirichlet(np.ones(pieces))
    densities = mass / np.diff(breakpoints)
    return make_piecewise_uniform_taskpricing(breakpoints, densities, rng.uniform(0.5, 1.0))


def random_demand_curve(rng: np.random.Generator, knots: int = 6) -> PiecewiseLinearCurve:
    """Random non-increasing piecewise-linear demand curve on [0, 1]."""
    xs = np.concatenate(([0.0], np.sort(rng.uniform(0.0, 1.0, knots - 2)), [1.0]))
    ys = np.sort(rng.uniform(0.0, 1.0, knots))[::-1]
    return PiecewiseLinearCurve(xs, ys)


def random_composite_cell(rng: np.random.Generator, candidates: CandidateSet, m: int,
                          max_depth: int) -> Cell:
    """A random composite cell found by a random walk down the dyadic tree."""
    target = int(rng.integers(0, max_depth + 1))
    cell = Cell.root(m)
    while cell.depth < target:
        children = [c for c in quadrants(cell, max_depth)
                    if candidates.count(c).relevant and not candidates.count(c).atomic]
        if not children:
            break
        cell = children[int(rng.integers(len(children)))]
    return cell


# ── Width versus virtual width ──────────────────────────────

@dataclass
class WidthSweepReport:
    """Outcome of a width <= virtual width sweep."""

    passed: bool
    checked: int
    worst_margin: float
    counterexample: Optional[Dict[str, Any]] = None


def verify_width_bound(generator: Callable[[np.random.Generator], SupplyModel], trials: int,
                       cells_per_trial: int, grid_divisions: int = 8,
                       rng: Optional[np.random.Generator] = None,
                       max_depth: int = 4) -> WidthSweepReport:
    """
    Grid width <= exact virtual width + 1e-9 on random instances and random cells.

    Stops at the first counterexample and returns it with the instance description.
    """
    rng = rng if rng is not None else np.random.default_rng()
    space = FullSpace(depth_cap=max_depth + 1)
    worst, checked = math.inf, 0
    for trial in range(trials):
        env = generator(rng)
        for _ in range(cells_per_trial):
            cell = random_composite_cell(rng, space, env.m, max_depth)
            vw = exact_virtual_width(env, cell, space)
            width = exact_width(env, cell, cell.side / grid_divisions)
            margin = vw - width
            worst = min(worst, margin)
            checked += 1
            if margin < -MARGIN_TOLERANCE:
                logger.error(f"Width exceeds virtual width on {cell}: {width} > {vw}")
                return WidthSweepReport(False, checked, worst, {
                    'trial': trial, 'cell': cell.notation, 'width': width,
                    'virtual_width': vw, 'instance': env.describe()})
    return WidthSweepReport(True, checked, worst)


def inventory_width_sweep(curves: int, cells_per_curve: int, grid_divisions: int = 8,
                          rng: Optional[np.random.Generator] = None,
                          max_depth: int = 6) -> WidthSweepReport:
    """Grid width <= two-outcome virtual width on random demand curves and intervals."""
    rng = rng if rng is not None else np.random.default_rng()
    return verify_width_bound(lambda r: make_inventory_env(random_demand_curve(r)), curves,
                              cells_per_curve, grid_divisions, rng, max_depth)


# ── High-low market identities ──────────────────────────────

def random_high_low_market(rng: np.random.Generator, max_types: int = 4) -> SupplyModel:
    """Random high-low market with v(low) = 0: a finite mixture or a parametric market."""
    v_high = rng.uniform(0.2, 1.0)
    values = (0.0, 0.0, v_high)
    if rng.random() < 0.5:
        low, width = rng.uniform(0.0, 0.5), rng.uniform(0.1, 0.5)
        return HighLowParametric(stats.uniform(low, width), theta_h=rng.uniform(0.1, 1.0),
                                 values=values)
    count = int(rng.integers(1, max_types + 1))
    types = [high_low_type(rng.uniform(0.0, 1.0), rng.uniform(0.1, 1.0)) for _ in range(count)]
    weights = rng.dirichlet(np.ones(count))
    weights[-1] = 1.0 - weights[:-1].sum()
    return FiniteMixture(OutcomeSpace(values), types, weights)


def high_low_share(env: SupplyModel, p: float) -> float:
    """S(p) computed directly from the type parameters, independent of best_response."""
    if isinstance(env, HighLowParametric):
        return float(env.high_probability(p)[0])
    share = 0.0
    for weight, worker in zip(env.weights, env.types):
        theta = worker.production[2, 2]
        if theta * p >= worker.costs[2]:
            share += weight * theta
    return share


def high_low_identity(contracts: int, rng: Optional[np.random.Generator] = None) -> float:
    """
    Largest |U(x) - (S(p)(v - p) - x(low))| over random contracts and v(low) = 0 markets.
    """
    rng = rng if rng is not None else np.random.default_rng()
    worst = 0.0
    for _ in range(contracts):
        env = random_high_low_market(rng)
        base = rng.uniform(0.0, 1.0)
        step = rng.uniform(0.0, 1.0 - base)
        exact = env.exact_breakdown(Contract((base, step))).utility
        v_high = env.outcomes.values[2]
        closed = high_low_share(env, step) * (v_high - step) - base
        worst = max(worst, abs(exact - closed))
    return worst


def discretization_check(deltas: Sequence[float], fine_divisor: int,
                         markets: Sequence[SupplyModel]) -> List[Dict[str, Any]]:
    """Discretization error against its 3 delta + 2 fine-step bound, per market and delta."""
    rows = []
    for i, env in enumerate(markets):
        for delta in deltas:
            fine = delta / fine_divisor
            gap = discretization_error(env, fine, UniformMesh(delta))
            bound = 3 * delta + 2 * fine
            rows.append({'market': i, 'delta': delta, 'fine_step': fine, 'error': gap,
                         'bound': bound, 'passed': bool(gap <= bound)})
    return rows


def nonmonotone_check(cost_h: float = 0.2, values: Sequence[float] = (0.0, 0.0, 0.6, 1.0),
                      step: float = 0.01) -> Dict[str, Any]:
    """Unrestricted and monotone optima of the non-monotone instance."""
    env = make_nonmonotone_example(cost_h, values)
    unrestricted = opt_search_payments(env, step)
    monotone = opt_search(env, UniformMesh(step))
    return {
        'unrestricted_utility': unrestricted.utility,
        'unrestricted_payments': unrestricted.payments.tolist(),
        'monotone_utility': monotone.utility,
        'monotone_payments': monotone.payments.tolist(),
        'gap': unrestricted.utility - monotone.utility,
        'expected_gap': 0.5 * (values[2] - values[1]) - cost_h,
    }


# ── Algorithm-level checks ──────────────────────────────────

@dataclass
class CleanExecutionTally:
    """(round, active cell) pairs whose average utility strays beyond the radius."""

    pairs: int = 0
    violations: int = 0
    _truth: Dict[Cell, float] = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return self.violations / self.pairs if self.pairs else 0.0

    def expected_cell_utility(self, algorithm: ZoomingAlgorithm, cell: Cell) -> float:
        if cell not in self._truth:
            anchors = algorithm.anchors[cell]
            posted = [anchors.lower] if anchors.atomic else [anchors.lower, anchors.upper]
            self._truth[cell] = float(np.mean(
                [algorithm.env.exact_breakdown(c).utility for c in posted]))
        return self._truth[cell]

    def __call__(self, algorithm: ZoomingAlgorithm, log) -> None:
        for cell in algorithm.active:
            cell_stats = algorithm.stats[cell]
            if cell_stats.n == 0:
                continue
            self.pairs += 1
            gap = abs(cell_stats.mean_utility - self.expected_cell_utility(algorithm, cell))
            if gap > confidence_radius(cell_stats, algorithm.cfg, SELECTION):
                self.violations += 1


def clean_execution_rate(env: SupplyModel, candidates: CandidateSet, runs: int, horizon: int,
                         base_seed: int, custom_config: Optional[Dict[str, Any]] = None
                         ) -> float:
    """Fraction of (round, active cell) pairs outside the theoretical-mode radius."""
    cfg = ZoomConfig.from_config(horizon, custom_config, mode='theoretical', c_rad=16.0)
    tally = CleanExecutionTally()
    for run_id in range(runs):
        algorithm = ZoomingAlgorithm(env, candidates, cfg, on_round=tally)
        algorithm.run(np.random.default_rng([base_seed, run_id]), run_id)
    return tally.rate


def width_bound_spot_check(algorithm: ZoomingAlgorithm, grid_divisions: int = 8) -> float:
    """min over every composite cell the run ever activated of vw - grid width."""
    worst = math.inf
    for cell, anchors in algorithm.anchors.items():
        if anchors.atomic:
            continue
        vw = exact_virtual_width(algorithm.env, cell, algorithm.candidates)
        width = exact_width(algorithm.env, cell, cell.side / grid_divisions)
        worst = min(worst, vw - width)
    return worst


def ucb_sanity(horizon: int, seeds: int, gap: float = 0.2,
               custom_config: Optional[Dict[str, Any]] = None) -> Tuple[float, float]:
    """
    Mean pseudo-regret of classical UCB1 on two Bernoulli arms with the given gap.

    Returns:
        (mean regret over seeds, the bound 60 ln T / gap)
    """
    means = np.array([0.5 + gap / 2, 0.5 - gap / 2])
    regrets = []
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        policy = BanditPolicy('ucb1', 2, custom_config)
        chosen = run_policy(policy, lambda arm, r: float(r.random() < means[arm]), horizon, rng)
        regrets.append(gap * float(np.sum(chosen == 1)))
    return float(np.mean(regrets)), 60 * math.log(horizon) / gap
