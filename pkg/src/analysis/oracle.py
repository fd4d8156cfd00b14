"""
Exact-oracle optimization and width computations.

Every quantity here uses the environment's exact breakdown; nothing is sampled.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from src.envs.supply import InventoryDemand, SupplyModel
from src.mesh.candidates import CandidateSet, UniformMesh, anchors_of
from src.mesh.cells import Cell
from src.model.contracts import Contract, increments_to_payments

# Rows evaluated per oracle call when sweeping large grids
CHUNK_ROWS = 200_000


@dataclass
class OptResult:
    """Maximizer of exact utility over a finite set (or a grid standing in for one)."""

    utility: float
    payments: np.ndarray
    evaluated: int
    grid_step: Optional[float] = None
    monotone: bool = True
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def contract(self) -> Optional[Contract]:
        """The maximizer as a monotone contract, or None for non-monotone payments."""
        if np.any(np.diff(self.payments) < 0):
            return None
        return Contract.from_payments(self.payments)


def _best_row(env: SupplyModel, payments: np.ndarray) -> tuple:
    """Index and utility of the first maximizing row, chunked."""
    best_index, best_value = -1, -math.inf
    for start in range(0, len(payments), CHUNK_ROWS):
        utilities = env.utility_batch(payments[start:start + CHUNK_ROWS])
        i = int(np.argmax(utilities))
        if utilities[i] > best_value:
            best_index, best_value = start + i, float(utilities[i])
    return best_index, best_value


def opt_search(env: SupplyModel, candidates: Optional[CandidateSet] = None,
               grid_step: Optional[float] = None) -> OptResult:
    """
    Exhaustive search of exact utility over a finite candidate set.

    Infinite sets (FullSpace) are replaced by the uniform mesh of `grid_step`, which is
    recorded on the result. Ties go to the lexicographically smallest increments.

    Raises:
        ValueError: if neither a finite set nor a grid step is available
    """
    if candidates is None or not candidates.finite:
        if grid_step is None:
            raise ValueError("An infinite candidate set needs a grid_step")
        candidates = UniformMesh(grid_step)

    increments = candidates.increments_array(env.m)
    payments = increments_to_payments(increments)
    index, value = _best_row(env, payments)
    step = candidates.delta if isinstance(candidates, UniformMesh) else grid_step
    return OptResult(value, payments[index], len(payments), step)


def opt_search_payments(env: SupplyModel, step: float) -> OptResult:
    """
    Brute force over all payment vectors on the step-grid of [0, 1]^m, monotone or not.

    Ties go to the lexicographically smallest payment vector.
    """
    levels = int(round(1 / step))
    axis = np.arange(levels + 1) * (1.0 / levels)
    mesh = np.meshgrid(*([axis] * env.m), indexing='ij')
    rows = np.stack([a.ravel() for a in mesh], axis=1)
    payments = np.hstack([np.zeros((len(rows), 1)), rows])
    index, value = _best_row(env, payments)
    return OptResult(value, payments[index], len(payments), 1.0 / levels, monotone=False)


def exact_virtual_width(env: SupplyModel, cell: Cell, candidates: CandidateSet) -> float:
    """
    Exact virtual width of a composite cell.

    General: (V(x+) - P(x-)) - (V(x-) - P(x+)). Inventory pricing uses the two-outcome
    form p+ S(p-) - p- S(p+).

    Raises:
        ValueError: if the cell is atomic or irrelevant
    """
    anchors = anchors_of(candidates, cell)
    if anchors.atomic:
        raise ValueError(f"Virtual width is defined for composite cells; {cell} is atomic")
    return float(virtual_width_batch(env, anchors.lower.increments, anchors.upper.increments)[0])


def virtual_width_batch(env: SupplyModel, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Exact virtual width for rows of lower/upper anchor increments."""
    low_pay = increments_to_payments(lower)
    high_pay = increments_to_payments(upper)
    if isinstance(env, InventoryDemand):
        p_low, p_high = low_pay[:, 1], high_pay[:, 1]
        return p_high * env.sale_probability(p_low) - p_low * env.sale_probability(p_high)
    v_low, pay_low = env.breakdown_batch(low_pay)
    v_high, pay_high = env.breakdown_batch(high_pay)
    return (v_high - pay_low) - (v_low - pay_high)


def cell_grid(cell: Cell, grid_step: float) -> np.ndarray:
    """Grid of increment vectors inside the closed cell, including both corners."""
    points = int(math.ceil(cell.side / grid_step - 1e-9)) + 1
    axes = [np.linspace(lo, hi, points) for lo, hi in zip(cell.lower, cell.upper)]
    mesh = np.meshgrid(*axes, indexing='ij')
    return np.stack([axis.ravel() for axis in mesh], axis=1)


def exact_width(env: SupplyModel, cell: Cell, grid_step: float) -> float:
    """
    Grid estimate of width(C) = sup |U(x) - U(y)| over the closed cell.

    A lower bound on the true width that converges as grid_step shrinks.

    Raises:
        ValueError: if grid_step exceeds an eighth of the cell side
    """
    if grid_step > cell.side / 8 + 1e-15:
        raise ValueError(f"Grid step {grid_step} too coarse for cell side {cell.side}")
    utilities = env.utility_batch(increments_to_payments(cell_grid(cell, grid_step)))
    return float(utilities.max() - utilities.min())
