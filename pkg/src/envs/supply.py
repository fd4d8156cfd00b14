"""
Supply models: distributions over worker types with a sampler and an exact oracle.

Every model owns its OutcomeSpace and exposes:
  - play_round: one i.i.d. worker arrival under a posted contract
  - exact_breakdown: expected value, payment and utility with no sampling
  - breakdown_batch: the same oracle vectorized over an (N, m + 1) payment array

Four variants cover the markets of interest: a finite mixture of explicit worker
types, the parametric high-low market, single-outcome task pricing and the selling
dual (inventory pricing), where the requester is paid p when a sale happens.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, stats

from src.model.contracts import Contract, OutcomeSpace
from src.model.worker import (
    UtilityBreakdown,
    WorkerType,
    breakdown_batch_for_type,
    draw_from_row,
    expected_breakdown_for_type,
    best_response,
)
from src.utils.helpers import resolve_config
from src.utils.logger import get_logger

logger = get_logger(__name__)

# Grid used to certify monotonicity of arbitrary supply curves
CURVE_CHECK_POINTS = 1001
CURVE_TOLERANCE = 1e-12
COST_BUCKETS = 10


@dataclass(frozen=True)
class RoundOutcome:
    """
    Result of one round.

    Algorithms may only read outcome, value, payment and utility; type_id and effort
    are debug telemetry and are stripped by visible(). In the high-low market type_id is
    the decile of the drawn cost within cost_dist (0 cheapest). Task pricing and inventory
    have no worker type and leave it None.
    """

    outcome: int
    value: float
    payment: float
    utility: float
    type_id: Optional[int] = None
    effort: Optional[int] = None

    def visible(self) -> 'RoundOutcome':
        return replace(self, type_id=None, effort=None)


class PiecewiseLinearCurve:
    """A curve on [0, 1] given by knots and linear interpolation (np.interp)."""

    def __init__(self, xs: Sequence[float], ys: Sequence[float]):
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        if self.xs.shape != self.ys.shape or self.xs.ndim != 1 or len(self.xs) < 2:
            raise ValueError("Knot arrays must be one-dimensional, equal length and >= 2 long")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("Knot abscissae must be strictly increasing")

    def __call__(self, p):
        return np.interp(p, self.xs, self.ys)

    def describe(self) -> Dict[str, Any]:
        return {'xs': self.xs.tolist(), 'ys': self.ys.tolist()}


def _curve_samples(curve: Callable) -> Tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(0.0, 1.0, CURVE_CHECK_POINTS)
    if isinstance(curve, PiecewiseLinearCurve):
        grid = np.union1d(grid, np.clip(curve.xs, 0.0, 1.0))
    return grid, np.asarray(curve(grid), dtype=float)


class SupplyModel(ABC):
    """Base class for all supply variants."""

    kind: str = 'abstract'

    def __init__(self, outcomes: OutcomeSpace, custom_config: Optional[Dict[str, Any]] = None):
        self.outcomes = outcomes
        self.config = resolve_config(custom_config)
        self.band = float(self.config['model']['indifference_band'])

    @property
    def m(self) -> int:
        return self.outcomes.m

    def check_dimension(self, contract: Contract) -> None:
        if contract.m != self.m:
            raise ValueError(
                f"Contract dimension {contract.m} does not match environment dimension {self.m}"
            )

    def realized_payment(self, contract: Contract, outcome: int) -> float:
        """Payment made to the worker when `outcome` is realized."""
        return float(contract.payments[outcome])

    def play_round(self, contract: Contract, rng: np.random.Generator,
                   debug: bool = False) -> RoundOutcome:
        """
        One round: a fresh worker arrives, best-responds, and an outcome is drawn.

        Args:
            contract: posted contract, weakly bounded
            rng: the caller's generator; the only state this mutates
            debug: keep the sampled type and effort on the result

        Returns:
            RoundOutcome: realized outcome, value, payment and utility
        """
        self.check_dimension(contract)
        outcome, type_id, effort = self._draw(contract, rng)
        value = self.outcomes.values[outcome]
        payment = self.realized_payment(contract, outcome)
        result = RoundOutcome(outcome, value, payment, value - payment, type_id, effort)
        return result if debug else result.visible()

    def exact_breakdown(self, contract: Contract) -> UtilityBreakdown:
        """Exact expected value, payment and utility of a contract."""
        self.check_dimension(contract)
        values, payments = self.breakdown_batch(contract.payments[np.newaxis, :])
        return UtilityBreakdown.from_parts(values[0], payments[0])

    def utility_batch(self, payments: np.ndarray) -> np.ndarray:
        """Exact expected utility for each row of an (N, m + 1) payment array."""
        values, paid = self.breakdown_batch(payments)
        return values - paid

    def _check_payments(self, payments: np.ndarray) -> np.ndarray:
        payments = np.atleast_2d(np.asarray(payments, dtype=float))
        if payments.shape[1] != self.m + 1:
            raise ValueError(
                f"Payment rows have {payments.shape[1] - 1} non-null outcomes, "
                f"environment has {self.m}"
            )
        return payments

    @abstractmethod
    def _draw(self, contract: Contract,
              rng: np.random.Generator) -> Tuple[int, Optional[int], Optional[int]]:
        """Return (outcome, type id, effort) for one arrival."""

    @abstractmethod
    def breakdown_batch(self, payments: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Exact expected (value, payment) arrays for an (N, m + 1) payment array."""

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """Parameters recorded in experiment metadata."""


class FiniteMixture(SupplyModel):
    """Workers drawn i.i.d. from explicit types with weights lambda_i."""

    kind = 'finite_mixture'

    def __init__(self, outcomes: OutcomeSpace, types: Sequence[WorkerType],
                 weights: Sequence[float], custom_config: Optional[Dict[str, Any]] = None):
        super().__init__(outcomes, custom_config)
        self.types: List[WorkerType] = list(types)
        self.weights = np.asarray(weights, dtype=float)

        tolerance = float(self.config['model']['weight_tolerance'])
        if len(self.types) == 0 or len(self.types) != len(self.weights):
            raise ValueError(f"Need one weight per type, got {len(self.weights)} "
                             f"weights for {len(self.types)} types")
        if np.any(self.weights < 0):
            raise ValueError(f"Mixture weights must be non-negative, got {self.weights}")
        if abs(self.weights.sum() - 1.0) > tolerance:
            raise ValueError(f"Mixture weights sum to {self.weights.sum():.15g}, not 1")
        for i, worker in enumerate(self.types):
            if worker.m != outcomes.m:
                raise ValueError(f"Type {i} has {worker.m} non-null outcomes, "
                                 f"outcome space has {outcomes.m}")

    def _draw(self, contract, rng):
        type_id = draw_from_row(self.weights, rng) if len(self.types) > 1 else 0
        worker = self.types[type_id]
        effort = best_response(worker, contract, self.band)
        outcome = draw_from_row(worker.production[effort], rng)
        return outcome, type_id, effort

    def exact_breakdown(self, contract: Contract) -> UtilityBreakdown:
        self.check_dimension(contract)
        value = payment = 0.0
        for weight, worker in zip(self.weights, self.types):
            part = expected_breakdown_for_type(worker, contract, self.outcomes, self.band)
            value += weight * part.value
            payment += weight * part.payment
        return UtilityBreakdown.from_parts(value, payment)

    def breakdown_batch(self, payments):
        payments = self._check_payments(payments)
        values = self.outcomes.as_array()
        total_v = np.zeros(payments.shape[0])
        total_p = np.zeros(payments.shape[0])
        for weight, worker in zip(self.weights, self.types):
            v, p = breakdown_batch_for_type(worker, payments, values, self.band)
            total_v += weight * v
            total_p += weight * p
        return total_v, total_p

    def describe(self):
        return {
            'kind': self.kind,
            'values': list(self.outcomes.values),
            'weights': self.weights.tolist(),
            'types': [{'name': w.name, 'costs': w.costs.tolist(),
                       'production': w.production.tolist()} for w in self.types],
        }


class HighLowParametric(SupplyModel):
    """
    High-low market with a continuum of worker types.

    Each worker draws c_h from `cost_dist` and theta_h from `theta_dist` (or uses a fixed
    theta_h). With b = x(low) and p = x(high) - x(low) the worker exerts high effort iff
    theta_h * p >= c_h, so the high outcome occurs with probability
    S(p) = E[theta_h * 1{c_h <= theta_h * p}].
    """

    kind = 'high_low'

    def __init__(self, cost_dist, theta_h: Optional[float] = None, theta_dist=None,
                 values: Sequence[float] = (0.0, 0.3, 1.0),
                 custom_config: Optional[Dict[str, Any]] = None):
        super().__init__(OutcomeSpace(tuple(values)), custom_config)
        if self.outcomes.m != 2:
            raise ValueError("The high-low market has exactly two non-null outcomes")
        if (theta_h is None) == (theta_dist is None):
            raise ValueError("Give exactly one of theta_h or theta_dist")
        self.cost_dist = cost_dist
        self.theta_h = theta_h
        self.theta_dist = theta_dist
        self.abs_tol = float(self.config['quadrature']['abs_tol'])

    def high_probability(self, p) -> np.ndarray:
        """S(p): probability of the high outcome at high-low increment p."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self.theta_h is not None:
            return self.theta_h * self.cost_dist.cdf(self.theta_h * p)

        lo, hi = self.theta_dist.support()
        result = np.empty_like(p)
        for i, price in enumerate(p):
            integrand = lambda t, price=price: (
                t * self.cost_dist.cdf(t * price) * self.theta_dist.pdf(t)
            )
            result[i], _ = integrate.quad(integrand, lo, hi, epsabs=self.abs_tol)
        return result

    def _draw(self, contract, rng):
        cost = float(self.cost_dist.rvs(random_state=rng))
        theta = self.theta_h if self.theta_h is not None else float(
            self.theta_dist.rvs(random_state=rng))
        bucket = min(int(self.cost_dist.cdf(cost) * COST_BUCKETS), COST_BUCKETS - 1)
        payments = contract.payments
        # low effort is free and never loses to null; high wins ties
        effort = 2 if theta * (payments[2] - payments[1]) - cost >= -self.band else 1
        if effort == 1:
            return 1, bucket, effort
        return (2 if rng.random() < theta else 1), bucket, effort

    def breakdown_batch(self, payments):
        payments = self._check_payments(payments)
        base = payments[:, 1]
        step = payments[:, 2] - payments[:, 1]
        share = self.high_probability(step)
        v_low, v_high = self.outcomes.values[1], self.outcomes.values[2]
        return share * v_high + (1 - share) * v_low, base + share * step

    def describe(self):
        return {
            'kind': self.kind,
            'values': list(self.outcomes.values),
            'cost_dist': _dist_name(self.cost_dist),
            'theta_h': self.theta_h,
            'theta_dist': _dist_name(self.theta_dist) if self.theta_dist is not None else None,
        }


class TaskPricingCurve(SupplyModel):
    """
    Dynamic task pricing: one non-null outcome, posted price p.

    The worker accepts with probability S(p), the cost CDF; the requester then gains
    v - p, so U(p) = S(p) * (v - p).
    """

    kind = 'task_pricing'

    def __init__(self, curve: Callable, value: float = 1.0,
                 custom_config: Optional[Dict[str, Any]] = None):
        super().__init__(OutcomeSpace((0.0, value)), custom_config)
        grid, samples = _curve_samples(curve)
        if np.any(samples < -CURVE_TOLERANCE) or np.any(samples > 1 + CURVE_TOLERANCE):
            raise ValueError("Acceptance probabilities must lie in [0, 1]")
        if np.any(np.diff(samples) < -CURVE_TOLERANCE):
            raise ValueError("Acceptance curve S(p) must be non-decreasing on [0, 1]")
        self.curve = curve
        self.value = float(value)

    def _draw(self, contract, rng):
        accepted = rng.random() < float(self.curve(contract.payments[1]))
        return (1 if accepted else 0), None, (1 if accepted else 0)

    def breakdown_batch(self, payments):
        payments = self._check_payments(payments)
        share = np.asarray(self.curve(payments[:, 1]), dtype=float)
        return share * self.value, share * payments[:, 1]

    def describe(self):
        curve = self.curve.describe() if hasattr(self.curve, 'describe') else repr(self.curve)
        return {'kind': self.kind, 'value': self.value, 'curve': curve}


class InventoryDemand(SupplyModel):
    """
    Dynamic inventory pricing, the selling dual of task pricing.

    A buyer arrives and buys at price p with probability S(p), S non-increasing. Outcome 1
    is a sale; it carries value 0 and payment -p, so realized utility is the revenue.
    """

    kind = 'inventory'

    def __init__(self, curve: Callable, custom_config: Optional[Dict[str, Any]] = None):
        super().__init__(OutcomeSpace((0.0, 0.0)), custom_config)
        grid, samples = _curve_samples(curve)
        if np.any(samples < -CURVE_TOLERANCE) or np.any(samples > 1 + CURVE_TOLERANCE):
            raise ValueError("Sale probabilities must lie in [0, 1]")
        if np.any(np.diff(samples) > CURVE_TOLERANCE):
            raise ValueError("Demand curve S(p) must be non-increasing on [0, 1]")
        self.curve = curve

    def sale_probability(self, p) -> np.ndarray:
        return np.asarray(self.curve(p), dtype=float)

    def realized_payment(self, contract, outcome):
        return -float(contract.payments[1]) if outcome == 1 else 0.0

    def _draw(self, contract, rng):
        sold = rng.random() < float(self.curve(contract.payments[1]))
        return (1 if sold else 0), None, None

    def breakdown_batch(self, payments):
        payments = self._check_payments(payments)
        price = payments[:, 1]
        return np.zeros_like(price), -price * self.sale_probability(price)

    def describe(self):
        curve = self.curve.describe() if hasattr(self.curve, 'describe') else repr(self.curve)
        return {'kind': self.kind, 'curve': curve}


def _dist_name(dist) -> str:
    if dist is None:
        return 'none'
    name = getattr(getattr(dist, 'dist', None), 'name', type(dist).__name__)
    return f"{name}{tuple(float(a) for a in getattr(dist, 'args', ()))}"


# Convenience functions

def play_round(env: SupplyModel, contract: Contract, rng: np.random.Generator,
               debug: bool = False) -> RoundOutcome:
    """Sample one round of `env` under `contract`."""
    return env.play_round(contract, rng, debug)


def exact_utility(env: SupplyModel, contract: Contract) -> UtilityBreakdown:
    """Exact expected value, payment and utility of `contract` in `env`."""
    return env.exact_breakdown(contract)


def uniform_cost() -> Any:
    """Uniform[0, 1] cost distribution (scipy.stats frozen)."""
    return stats.uniform(loc=0.0, scale=1.0)
