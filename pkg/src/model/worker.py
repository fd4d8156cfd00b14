"""
Worker types and strategic best response.

A worker type is a cost function over effort levels plus a row-stochastic production
function f(pi | e). Given a contract, the worker picks the effort maximizing expected
payment minus cost; ties are resolved by a fixed per-type priority order so that the
same tie resolves identically at every contract. All oracles here are exact.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.model.contracts import Contract, OutcomeSpace

INDIFFERENCE_BAND = 1e-12
ROW_TOLERANCE = 1e-12

PaymentsLike = Union[Contract, Sequence[float], np.ndarray]


class Dominance(str, Enum):
    """Result of comparing two effort levels by first-order stochastic dominance."""

    E_DOMINATES = 'e_dominates'
    E2_DOMINATES = 'e2_dominates'
    EQUAL = 'equal'
    INCOMPARABLE = 'incomparable'


@dataclass(frozen=True)
class UtilityBreakdown:
    """Expected requester value V, payment P and utility U = V - P."""

    value: float
    payment: float
    utility: float

    @classmethod
    def from_parts(cls, value: float, payment: float) -> 'UtilityBreakdown':
        return cls(float(value), float(payment), float(value) - float(payment))


def upper_cumulative(production: np.ndarray) -> np.ndarray:
    """F(pi | e) = sum over pi' >= pi of f(pi' | e), row by row."""
    production = np.asarray(production, dtype=float)
    return np.cumsum(production[:, ::-1], axis=1)[:, ::-1]


def default_tiebreak_order(production: np.ndarray) -> Tuple[int, ...]:
    """Efforts sorted from most to least FOSD-dominant (index breaks exact ties)."""
    cumulative = upper_cumulative(production)
    return tuple(sorted(range(len(cumulative)), key=lambda e: (tuple(-cumulative[e, 1:]), e)))


@dataclass(frozen=True, eq=False)
class WorkerType:
    """
    A worker's private type.

    Attributes:
        costs: c(e) per effort level, index 0 is the null effort
        production: f(pi | e) as an (efforts, m + 1) matrix
        tiebreak_order: effort levels from most to least preferred among maximizers
        name: optional label used in telemetry
    """

    costs: np.ndarray
    production: np.ndarray
    tiebreak_order: Optional[Tuple[int, ...]] = None
    name: str = ''
    _rank: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        costs = np.array(self.costs, dtype=float)
        production = np.atleast_2d(np.array(self.production, dtype=float))
        if costs.ndim != 1 or production.shape[0] != costs.shape[0]:
            raise ValueError(
                f"Costs ({costs.shape}) and production rows ({production.shape}) disagree"
            )
        costs.setflags(write=False)
        production.setflags(write=False)
        object.__setattr__(self, 'costs', costs)
        object.__setattr__(self, 'production', production)

        order = self.tiebreak_order
        if order is None:
            order = default_tiebreak_order(production)
        order = tuple(int(e) for e in order)
        if sorted(order) != list(range(len(costs))):
            raise ValueError(f"Tie-break order {order} is not a permutation of the efforts")
        object.__setattr__(self, 'tiebreak_order', order)

        rank = np.empty(len(order), dtype=int)
        rank[list(order)] = np.arange(len(order))
        object.__setattr__(self, '_rank', rank)

    @property
    def effort_count(self) -> int:
        return int(self.costs.shape[0])

    @property
    def m(self) -> int:
        return int(self.production.shape[1]) - 1

    @property
    def rank(self) -> np.ndarray:
        """rank[e] is the position of effort e in the tie-break order."""
        return self._rank


@dataclass
class TypeValidation:
    """Outcome of validate_type: ok, or the list of violated invariants."""

    ok: bool
    violations: List[str] = field(default_factory=list)

    @property
    def message(self) -> str:
        """The first violation, or 'ok'."""
        return self.violations[0] if self.violations else 'ok'


def high_low_type(cost_h: float, theta_h: float, name: str = '') -> WorkerType:
    """
    The high-low worker: efforts (null, low, high) over outcomes (null, low, high).

    Low effort is free and yields the low outcome; high effort costs cost_h and yields
    the high outcome with probability theta_h. Ties prefer high, then low, then null.
    """
    production = [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 1.0 - theta_h, theta_h],
    ]
    return WorkerType(costs=[0.0, 0.0, cost_h], production=production,
                      tiebreak_order=(2, 1, 0), name=name)


def fosd_compare(worker: WorkerType, e: int, e2: int,
                 tolerance: float = ROW_TOLERANCE) -> Dominance:
    """
    Compare efforts e and e2 of a type by upper-cumulative FOSD.

    Returns e_dominates iff F(pi|e) >= F(pi|e2) for all pi with strict inequality
    somewhere; symmetric for e2; equal iff the rows coincide; incomparable otherwise.
    """
    cumulative = upper_cumulative(worker.production)
    diff = cumulative[e] - cumulative[e2]

    if np.all(np.abs(diff) <= tolerance):
        return Dominance.EQUAL
    if np.all(diff >= -tolerance):
        return Dominance.E_DOMINATES
    if np.all(diff <= tolerance):
        return Dominance.E2_DOMINATES
    return Dominance.INCOMPARABLE


def validate_type(worker: WorkerType, tolerance: float = ROW_TOLERANCE) -> TypeValidation:
    """
    Check every WorkerType invariant; never raises.

    Returns:
        TypeValidation: ok flag plus violations in the order found
    """
    violations: List[str] = []
    production = worker.production
    costs = worker.costs

    if np.any(costs < 0):
        violations.append(f"negative cost at effort {int(np.argmin(costs))}")
    if costs[0] != 0:
        violations.append(f"null effort must be free, got cost {costs[0]}")

    for e, row in enumerate(production):
        if np.any(row < 0):
            violations.append(f"production row {e} has negative entries")
        elif abs(row.sum() - 1.0) > tolerance:
            violations.append(f"production row {e} sums to {row.sum():.15g}, not 1")

    if abs(production[0, 0] - 1.0) > tolerance:
        violations.append("null effort must yield the null outcome with probability 1")
    for e in range(1, worker.effort_count):
        if production[e, 0] != 0:
            violations.append(
                f"null outcome reachable from non-null effort {e} (f(0|{e})={production[e, 0]})"
            )

    for e in range(worker.effort_count):
        for e2 in range(e + 1, worker.effort_count):
            if fosd_compare(worker, e, e2, tolerance) in (Dominance.INCOMPARABLE, Dominance.EQUAL):
                violations.append(f"FOSD fails for pair ({e},{e2})")

    return TypeValidation(ok=not violations, violations=violations)


def _as_payments(contract: PaymentsLike) -> np.ndarray:
    if isinstance(contract, Contract):
        return contract.payments
    return np.asarray(contract, dtype=float)


def _check_dimension(worker: WorkerType, payments: np.ndarray) -> None:
    if payments.shape[-1] != worker.m + 1:
        raise ValueError(
            f"Contract has {payments.shape[-1] - 1} non-null outcomes, worker type has {worker.m}"
        )


def best_response(worker: WorkerType, contract: PaymentsLike,
                  band: float = INDIFFERENCE_BAND) -> int:
    """
    The effort level the worker exerts under a contract.

    Maximizes sum_pi x(pi) f(pi|e) - c(e); efforts within `band` of the maximum tie
    and the one ranked highest in the type's tie-break order wins.
    """
    payments = _as_payments(contract)
    _check_dimension(worker, payments)
    utilities = worker.production @ payments - worker.costs
    maximizers = np.flatnonzero(utilities >= utilities.max() - band)
    return int(maximizers[np.argmin(worker.rank[maximizers])])


def best_response_batch(worker: WorkerType, payments: np.ndarray,
                        band: float = INDIFFERENCE_BAND) -> np.ndarray:
    """Vectorized best_response over an (N, m + 1) array of payment vectors."""
    payments = np.atleast_2d(np.asarray(payments, dtype=float))
    _check_dimension(worker, payments)
    utilities = payments @ worker.production.T - worker.costs
    tied = utilities >= utilities.max(axis=1, keepdims=True) - band
    ranks = np.where(tied, worker.rank[np.newaxis, :], worker.effort_count)
    return np.argmin(ranks, axis=1)


def expected_breakdown_for_type(worker: WorkerType, contract: PaymentsLike,
                                outcomes: OutcomeSpace,
                                band: float = INDIFFERENCE_BAND) -> UtilityBreakdown:
    """Exact expected value, payment and utility when this type best-responds."""
    payments = _as_payments(contract)
    row = worker.production[best_response(worker, payments, band)]
    return UtilityBreakdown.from_parts(row @ outcomes.as_array(), row @ payments)


def breakdown_batch_for_type(worker: WorkerType, payments: np.ndarray, values: np.ndarray,
                             band: float = INDIFFERENCE_BAND) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized expected (value, payment) arrays for an (N, m + 1) payment array."""
    payments = np.atleast_2d(np.asarray(payments, dtype=float))
    rows = worker.production[best_response_batch(worker, payments, band)]
    return rows @ values, np.einsum('ij,ij->i', rows, payments)


def sample_outcome(worker: WorkerType, contract: PaymentsLike, rng: np.random.Generator,
                   band: float = INDIFFERENCE_BAND) -> int:
    """Draw the realized outcome from the production row of the best response."""
    effort = best_response(worker, contract, band)
    return draw_from_row(worker.production[effort], rng)


def draw_from_row(row: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-cdf draw of an outcome index from a probability row."""
    cdf = np.cumsum(row)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side='right'))
    return min(index, len(row) - 1)
