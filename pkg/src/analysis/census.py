"""
Census of feasible composite cells.

For every composite cell reachable from the root by splitting composite cells, down to
a maximum depth, compute the exact virtual width, the grid width and the badness
Delta(C) = OPT - max_{x in C} U(x). For each eps, N_eps counts the cells with
vw >= eps * beta that meet X_eps (Delta(C) <= eps). The slope of log N_eps against
log(1/eps) estimates the width dimension.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.analysis.oracle import opt_search, virtual_width_batch
from src.envs.supply import SupplyModel
from src.mesh.candidates import CandidateSet, CountKind, UniformMesh
from src.mesh.cells import Cell, quadrants
from src.model.contracts import increments_to_payments
from src.utils.helpers import resolve_config
from src.utils.logger import get_logger

logger = get_logger(__name__)

# Elements allowed in one broadcast membership / grid block
BLOCK_ELEMENTS = 2_000_000
FULL_SPACE_OPT_STEP = 1 / 256


@dataclass
class CensusRow:
    cell: str
    depth: int
    virtual_width: float
    width: float
    badness: float
    relevant: bool = True
    composite: bool = True


@dataclass
class CensusResult:
    """Census rows, N_eps counts and the width-dimension fit."""

    rows: List[CensusRow]
    counts: Dict[float, int]
    fit: Dict[str, Any]
    opt: float
    opt_step: Optional[float]
    beta: float
    monotone: bool
    flags: List[str] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows])

    def counts_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'eps': list(self.counts), 'count': list(self.counts.values())})

    @property
    def worst_margin(self) -> float:
        """min over rows of vw - width."""
        if not self.rows:
            return math.inf
        return min(r.virtual_width - r.width for r in self.rows)


def feasible_cells(candidates: CandidateSet, m: int, max_depth: int,
                   guard: int) -> Dict[int, List[Cell]]:
    """
    Composite cells reachable from the root by splitting composite cells, by depth.

    Raises:
        ValueError: if more than `guard` cells would be enumerated
    """
    levels: Dict[int, List[Cell]] = {}
    frontier = [Cell.root(m)] if candidates.count(Cell.root(m)).kind == CountKind.MANY else []
    total = 0
    for depth in range(max_depth + 1):
        if not frontier:
            break
        levels[depth] = frontier
        total += len(frontier)
        if total > guard:
            raise ValueError(f"Census would enumerate more than {guard} cells "
                             f"(reached depth {depth}); lower max_depth")
        if depth == max_depth:
            break
        frontier = [child for cell in frontier for child in quadrants(cell, max_depth)
                    if candidates.count(child).kind == CountKind.MANY]
    return levels


def _grid_offsets(m: int, divisions: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, divisions + 1)
    mesh = np.meshgrid(*([axis] * m), indexing='ij')
    return np.stack([a.ravel() for a in mesh], axis=1)


def _level_widths(env: SupplyModel, lower: np.ndarray, side: float,
                  offsets: np.ndarray, full_space: bool) -> tuple:
    """Grid width of each cell, plus the best grid utility inside the simplex."""
    widths = np.empty(len(lower))
    best = np.full(len(lower), -np.inf)
    per_cell = len(offsets)
    block = max(1, BLOCK_ELEMENTS // (per_cell * lower.shape[1]))
    for start in range(0, len(lower), block):
        corner = lower[start:start + block]
        points = corner[:, None, :] + side * offsets[None, :, :]
        flat = points.reshape(-1, lower.shape[1])
        utilities = env.utility_batch(increments_to_payments(flat)).reshape(len(corner), per_cell)
        widths[start:start + block] = utilities.max(axis=1) - utilities.min(axis=1)
        if full_space:
            inside = points.sum(axis=2) <= 1 + 1e-12
            best[start:start + block] = np.where(inside, utilities, -np.inf).max(axis=1)
    return widths, best


def _level_best_candidates(candidates: CandidateSet, cells: Sequence[Cell], keys: np.ndarray,
                           key_utilities: np.ndarray) -> np.ndarray:
    """max U over the candidates inside each cell, exact key comparisons."""
    bounds = [candidates.cell_key_bounds(c) for c in cells]
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    best = np.empty(len(cells))
    block = max(1, BLOCK_ELEMENTS // (len(keys) * keys.shape[1]))
    for start in range(0, len(cells), block):
        l, h = lo[start:start + block], hi[start:start + block]
        inside = np.all((keys[None, :, :] >= l[:, None, :]) & (keys[None, :, :] <= h[:, None, :]),
                        axis=2)
        best[start:start + block] = np.where(inside, key_utilities[None, :], -np.inf).max(axis=1)
    return best


def fit_width_dimension(counts: Dict[float, int]) -> Dict[str, Any]:
    """Least-squares slope of log N_eps against log(1/eps), zero counts dropped."""
    eps = [e for e, n in counts.items() if n > 0]
    fit: Dict[str, Any] = {'slope': float('nan'), 'intercept': float('nan'),
                           'r2': float('nan'), 'eps_list': sorted(counts)}
    if len(eps) < 2:
        return fit
    xs = np.log([1.0 / e for e in eps])
    ys = np.log([counts[e] for e in eps])
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = ys - (slope * xs + intercept)
    total = ((ys - ys.mean()) ** 2).sum()
    r2 = 1.0 - (residual ** 2).sum() / total if total > 0 else 1.0
    fit.update(slope=float(slope), intercept=float(intercept), r2=float(r2))
    return fit


def cell_census(env: SupplyModel, candidates: CandidateSet, max_depth: int,
                eps_list: Optional[Sequence[float]] = None, beta: Optional[float] = None,
                custom_config: Optional[Dict[str, Any]] = None,
                opt_step: Optional[float] = None) -> CensusResult:
    """
    Enumerate feasible composite cells to max_depth and count wide near-optimal cells.

    Args:
        env: environment with an exact oracle
        candidates: candidate set; FullSpace uses a grid of opt_step for OPT and Delta
        max_depth: deepest cell enumerated
        eps_list: scales eps; defaults to 2^-j for the configured exponents
        beta: multiplier of eps in the width threshold

    Raises:
        ValueError: when the enumeration guard is exceeded
    """
    config = resolve_config(custom_config)
    analysis = config['analysis']
    if eps_list is None:
        eps_list = [2.0 ** -j for j in analysis['eps_exponents']]
    beta = float(analysis['beta']) if beta is None else float(beta)
    divisions = int(analysis['width_grid_divisions'])
    guard = int(config['mesh']['census_guard'])
    m = env.m

    full_space = not candidates.finite
    if full_space:
        opt_step = opt_step or FULL_SPACE_OPT_STEP
        opt = opt_search(env, UniformMesh(opt_step))
    else:
        opt = opt_search(env, candidates)
        keys = candidates.candidate_keys(m)
        key_utilities = env.utility_batch(
            increments_to_payments(candidates.increments_array(m)))

    offsets = _grid_offsets(m, divisions)
    rows: List[CensusRow] = []
    for depth, cells in feasible_cells(candidates, m, max_depth, guard).items():
        side = cells[0].side
        lower = np.array([c.lower for c in cells])
        widths, grid_best = _level_widths(env, lower, side, offsets, full_space)
        vws = virtual_width_batch(env, lower, lower + side)
        if full_space:
            best = grid_best
        else:
            best = _level_best_candidates(candidates, cells, keys, key_utilities)
        for cell, vw, width, top in zip(cells, vws, widths, best):
            rows.append(CensusRow(cell.notation, depth, float(vw), float(width),
                                  float(opt.utility - top)))

    counts = {}
    for eps in sorted(eps_list):
        counts[eps] = sum(1 for r in rows if r.virtual_width >= eps * beta and r.badness <= eps)
    fit = fit_width_dimension(counts)

    ordered = [counts[e] for e in sorted(counts)]
    monotone = all(a >= b for a, b in zip(ordered, ordered[1:]))
    flags = []
    if not monotone:
        flags.append('counts not non-increasing in eps')
    if fit['slope'] > float(analysis['slope_bound']):
        flags.append(f"slope {fit['slope']:.3f} above {analysis['slope_bound']}")
    for flag in flags:
        logger.warning(f"Census: {flag}")

    logger.info(f"Census: {len(rows)} feasible cells to depth {max_depth}, "
                f"slope {fit['slope']:.3f} (r2 {fit['r2']:.3f})")
    return CensusResult(rows, counts, fit, opt.utility, opt_step if full_space else None,
                        beta, monotone, flags)
