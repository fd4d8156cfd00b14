"""
Factories for the named markets and the JSON environment builder.
"""

import math
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from scipy import stats

from src.envs.supply import (
    FiniteMixture,
    HighLowParametric,
    InventoryDemand,
    PiecewiseLinearCurve,
    SupplyModel,
    TaskPricingCurve,
)
from src.model.contracts import OutcomeSpace
from src.model.loader import parse_model
from src.model.worker import WorkerType, high_low_type
from src.utils.helpers import resolve_config, validate_positive_number, validate_unit_interval
from src.utils.logger import get_logger

logger = get_logger(__name__)

DENSITY_TOLERANCE = 1e-9
MARKET_KINDS = ('uniform', 'homogeneous', 'two_type', 'taskpricing', 'staircase',
                'inventory', 'nonmonotone')


def _market_defaults(custom_config: Optional[Dict[str, Any]]) -> tuple:
    config = resolve_config(custom_config)
    return float(config['markets']['theta_h']), tuple(config['markets']['values'])


def make_uniform_market(custom_config: Optional[Dict[str, Any]] = None) -> HighLowParametric:
    """High-low market with c_h ~ Uniform[0, 1] for every arriving worker."""
    theta_h, values = _market_defaults(custom_config)
    return HighLowParametric(stats.uniform(0.0, 1.0), theta_h=theta_h, values=values,
                             custom_config=custom_config)


def make_homogeneous_market(cost_h: float,
                            custom_config: Optional[Dict[str, Any]] = None) -> FiniteMixture:
    """Every worker has the same high-effort cost."""
    validate_unit_interval(cost_h, 'cost_h')
    theta_h, values = _market_defaults(custom_config)
    worker = high_low_type(cost_h, theta_h, name=f"c_h={cost_h:.4g}")
    return FiniteMixture(OutcomeSpace(values), [worker], [1.0], custom_config)


def make_two_type_market(cost_h1: float, cost_h2: float,
                         custom_config: Optional[Dict[str, Any]] = None) -> FiniteMixture:
    """High-effort cost is one of two values, each with probability one half."""
    validate_unit_interval(cost_h1, 'cost_h1')
    validate_unit_interval(cost_h2, 'cost_h2')
    theta_h, values = _market_defaults(custom_config)
    workers = [high_low_type(c, theta_h, name=f"c_h={c:.4g}") for c in (cost_h1, cost_h2)]
    return FiniteMixture(OutcomeSpace(values), workers, [0.5, 0.5], custom_config)


def make_piecewise_uniform_taskpricing(breakpoints: Sequence[float], densities: Sequence[float],
                                       value: float = 1.0, lam: Optional[float] = None,
                                       custom_config: Optional[Dict[str, Any]] = None
                                       ) -> TaskPricingCurve:
    """
    Task pricing with a k-piecewise-uniform cost distribution on [0, 1].

    Args:
        breakpoints: k + 1 increasing points from 0 to 1
        densities: k densities, one per piece
        value: requester value of a completed task
        lam: declared density bound; every density must lie in [1/lam, lam]

    Raises:
        ValueError: if the pieces do not integrate to 1 or violate the lam bound
    """
    breakpoints = np.asarray(breakpoints, dtype=float)
    densities = np.asarray(densities, dtype=float)
    if len(breakpoints) != len(densities) + 1:
        raise ValueError("Need exactly one more breakpoint than densities")
    if breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
        raise ValueError("Breakpoints must start at 0 and end at 1")
    if np.any(densities < 0):
        raise ValueError("Densities must be non-negative")
    if lam is not None:
        validate_positive_number(lam, 'lam')
        if np.any(densities > lam) or np.any(densities < 1.0 / lam):
            raise ValueError(f"Densities {densities.tolist()} violate the bound lambda={lam}")

    cdf = np.concatenate(([0.0], np.cumsum(densities * np.diff(breakpoints))))
    if abs(cdf[-1] - 1.0) > DENSITY_TOLERANCE:
        raise ValueError(f"Densities integrate to {cdf[-1]:.12g}, not 1")
    cdf[-1] = 1.0
    return TaskPricingCurve(PiecewiseLinearCurve(breakpoints, cdf), value, custom_config)


def staircase_knots(delta: float) -> tuple:
    """
    Knots of the staircase instance and its single off-grid peak.

    U(p) = S(p)(1 - p) is 1/4 on the comb {4 j delta} inside [0.4, 0.6] and 1/4 + delta/4 at
    the point p* = 4 j delta + delta/2 nearest to 0.5.

    Returns:
        (xs, ys, p_star)
    """
    step = 4 * delta
    first = math.ceil(0.4 / step - 1e-9)
    last = math.floor(0.6 / step + 1e-9)
    comb = [j * step for j in range(first, last + 1)]
    p_star = min((p + delta / 2 for p in comb), key=lambda p: (abs(p - 0.5), p))

    knots = {0.0: 0.0, 1.0: 1.0}
    for p in comb:
        knots[p] = 0.25 / (1 - p)
    knots[p_star] = (0.25 + delta / 4) / (1 - p_star)
    xs = sorted(knots)
    return xs, [knots[x] for x in xs], p_star


def make_staircase_instance(delta: float,
                            custom_config: Optional[Dict[str, Any]] = None) -> TaskPricingCurve:
    """
    Task-pricing instance on which every uniform mesh of step delta misses the optimum.

    Raises:
        ValueError: unless 0 < delta < 1/20
    """
    if not 0 < delta < 1 / 20:
        raise ValueError(f"Staircase instance needs 0 < delta < 1/20, got {delta}")
    xs, ys, p_star = staircase_knots(delta)
    logger.debug(f"Staircase instance delta={delta}: {len(xs)} knots, peak at {p_star:.6g}")
    return TaskPricingCurve(PiecewiseLinearCurve(xs, ys), 1.0, custom_config)


def make_nonmonotone_example(cost_h: float, values: Sequence[float] = (0.0, 0.0, 0.6, 1.0),
                             custom_config: Optional[Dict[str, Any]] = None) -> FiniteMixture:
    """
    Single-type instance whose unique optimal contract is not monotone.

    Low effort is free and lands on outcome 1 or 3 with equal odds; high effort costs
    cost_h and lands on outcome 2 or 3 with equal odds.

    Raises:
        ValueError: unless 0 < cost_h < (v(2) - v(1)) / 2
    """
    outcomes = OutcomeSpace(tuple(values))
    if outcomes.m != 3:
        raise ValueError("The non-monotone example has exactly three non-null outcomes")
    bound = 0.5 * (outcomes.values[2] - outcomes.values[1])
    if not 0 < cost_h < bound:
        raise ValueError(f"cost_h must lie in (0, {bound:.6g}), got {cost_h}")

    worker = WorkerType(
        costs=[0.0, 0.0, cost_h],
        production=[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.5],
            [0.0, 0.0, 0.5, 0.5],
        ],
        name='nonmonotone',
    )
    return FiniteMixture(outcomes, [worker], [1.0], custom_config)


def linear_demand() -> PiecewiseLinearCurve:
    """S(p) = 1 - p."""
    return PiecewiseLinearCurve([0.0, 1.0], [1.0, 0.0])


def make_inventory_env(demand: Callable,
                       custom_config: Optional[Dict[str, Any]] = None) -> InventoryDemand:
    """Selling environment: reward p on a sale, sale probability demand(p)."""
    return InventoryDemand(demand, custom_config)


def _draw_cost(spec_value: Optional[float], rng: Optional[np.random.Generator]) -> float:
    if spec_value is not None:
        return float(spec_value)
    if rng is None:
        raise ValueError("A null cost means 'draw per run', which needs the run's market stream")
    return float(rng.uniform(0.0, 1.0))


def build_environment(spec: Dict[str, Any], rng: Optional[np.random.Generator] = None,
                      custom_config: Optional[Dict[str, Any]] = None) -> SupplyModel:
    """
    Build an environment from its JSON description.

    Either {"market": kind, params...} for the named markets or a full model document
    {"values": [...], "types": [...]}. Homogeneous and two-type markets accept null costs,
    drawn uniformly from [0, 1] with `rng`.

    Raises:
        ValueError: on an unknown market kind or missing parameters
    """
    kind = spec.get('market')
    if kind is None:
        outcomes, weighted = parse_model(spec)
        return FiniteMixture(outcomes, [w for _, w in weighted], [lam for lam, _ in weighted],
                             custom_config)

    if kind == 'uniform':
        theta_dist = spec.get('theta_dist')
        if theta_dist is None:
            return make_uniform_market(custom_config)
        _, values = _market_defaults(custom_config)
        low, high = float(theta_dist[0]), float(theta_dist[1])
        return HighLowParametric(stats.uniform(0.0, 1.0), theta_dist=stats.uniform(low, high - low),
                                 values=values, custom_config=custom_config)
    if kind == 'homogeneous':
        return make_homogeneous_market(_draw_cost(spec.get('cost_h'), rng), custom_config)
    if kind == 'two_type':
        costs = spec.get('costs') or [None, None]
        return make_two_type_market(_draw_cost(costs[0], rng), _draw_cost(costs[1], rng),
                                    custom_config)
    if kind == 'taskpricing':
        return make_piecewise_uniform_taskpricing(
            spec.get('breakpoints', [0.0, 1.0]), spec.get('densities', [1.0]),
            spec.get('value', 1.0), spec.get('lambda'), custom_config)
    if kind == 'staircase':
        return make_staircase_instance(float(spec['delta']), custom_config)
    if kind == 'inventory':
        demand = linear_demand()
        if 'xs' in spec:
            demand = PiecewiseLinearCurve(spec['xs'], spec['ys'])
        return make_inventory_env(demand, custom_config)
    if kind == 'nonmonotone':
        return make_nonmonotone_example(float(spec.get('cost_h', 0.2)),
                                        spec.get('values', (0.0, 0.0, 0.6, 1.0)), custom_config)

    raise ValueError(f"Unknown market '{kind}'; expected one of {', '.join(MARKET_KINDS)}")
