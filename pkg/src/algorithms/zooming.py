"""
Adaptive discretization over contracts (zooming).

The algorithm keeps a set of active dyadic cells of increment space. Each round it
picks the active cell with the largest index, posts one of the cell's anchors (a fair
coin decides between the two corners of a composite cell), and records the outcome.
When a composite cell's estimated virtual width exceeds k confidence radii the
cell is replaced by its relevant quadrants, whose statistics start from zero.

Index of a cell with n > 0 samples:
    atomic:    U + rad
    composite: U + W + k * rad
where U is the average realized utility, W the virtual width estimate and rad the
confidence radius. Unplayed cells have infinite index. k is 5 with the theoretical
radius sqrt(c_rad ln T / n). With the constant radius c / sqrt(n) the tuned constants
c_select = 1 and c_zoom = 0.6 already stand for the whole confidence term, so k is 1.
"""

import heapq
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from src.algorithms.records import RoundLog, RunRecord
from src.envs.supply import SupplyModel
from src.mesh.candidates import Anchors, CandidateSet, anchors_of
from src.mesh.cells import Cell, quadrants
from src.utils.helpers import resolve_config
from src.utils.logger import get_logger, run_logger

logger = get_logger(__name__)

SELECTION = 'selection'
ZOOMING = 'zooming'
MODES = ('constant', 'theoretical')
WIDTH_ESTIMATORS = ('general', 'inventory_two_outcome')

UPPER, LOWER, ATOMIC = '+', '-', 'atomic'


class InvariantViolation(RuntimeError):
    """A runtime invariant of the active cell set failed in a debug run."""

    def __init__(self, message: str, cell: Optional[Cell], round_number: int):
        super().__init__(f"Round {round_number}, cell {cell}: {message}")
        self.cell = cell
        self.round_number = round_number


@dataclass(frozen=True)
class ZoomConfig:
    """
    Constants of one zooming run.

    Attributes:
        mode: 'theoretical' uses sqrt(c_rad ln T / n); 'constant' uses c / sqrt(n)
        horizon: T, known in advance
        c_rad: theoretical-mode constant, at least 16
        c_select: constant-mode radius constant in the selection rule
        c_zoom: constant-mode radius constant in the zooming rule
        width_multiplier: k, the multiplier of rad in the index and zoom trigger, theoretical mode
        constant_width_multiplier: k in constant mode
        depth_cap: deepest allowed cell
        width_estimator: 'general' or 'inventory_two_outcome'
        debug_asserts: check the active-set invariants after every round
        coin_flag_sigmas: anchor coin imbalance is flagged beyond this many sigmas
    """

    mode: str = 'constant'
    horizon: int = 5000
    c_rad: float = 16.0
    c_select: float = 1.0
    c_zoom: float = 0.6
    width_multiplier: float = 5.0
    constant_width_multiplier: float = 1.0
    depth_cap: int = 20
    width_estimator: str = 'general'
    debug_asserts: bool = False
    coin_flag_sigmas: float = 5.0

    @classmethod
    def from_config(cls, horizon: int, custom_config: Optional[Dict[str, Any]] = None,
                    **overrides) -> 'ZoomConfig':
        """Defaults from the `zooming` and `mesh` config sections, then overrides."""
        config = resolve_config(custom_config)
        section = config['zooming']
        values = dict(
            mode=section['mode'],
            horizon=horizon,
            c_rad=float(section['c_rad']),
            c_select=float(section['c_select']),
            c_zoom=float(section['c_zoom']),
            width_multiplier=float(section['width_multiplier']),
            constant_width_multiplier=float(section['constant_width_multiplier']),
            depth_cap=int(config['mesh']['depth_cap']),
            width_estimator=section['width_estimator'],
            debug_asserts=bool(config['experiments']['debug_asserts']),
            coin_flag_sigmas=float(section['coin_flag_sigmas']),
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @property
    def multiplier(self) -> float:
        if self.mode == 'theoretical':
            return self.width_multiplier
        return self.constant_width_multiplier

    def validate(self, m: int) -> None:
        """
        Raises:
            ValueError: on an unknown mode/estimator, or theoretical-mode preconditions
        """
        if self.mode not in MODES:
            raise ValueError(f"Unknown confidence mode '{self.mode}'")
        if self.width_estimator not in WIDTH_ESTIMATORS:
            raise ValueError(f"Unknown width estimator '{self.width_estimator}'")
        if self.horizon < 1:
            raise ValueError(f"Horizon must be positive, got {self.horizon}")
        if self.mode == 'theoretical':
            if self.c_rad < 16:
                raise ValueError(f"Theoretical mode needs c_rad >= 16, got {self.c_rad}")
            if self.horizon < max(2 ** m + 1, 18):
                raise ValueError(
                    f"Theoretical mode needs T >= max(2^m + 1, 18) = {max(2 ** m + 1, 18)}"
                )
        if self.width_estimator == 'inventory_two_outcome' and m != 1:
            raise ValueError("The two-outcome width estimator needs m = 1")


@dataclass
class CellStats:
    """Running statistics of one cell, tallied per anchor."""

    counts: Dict[str, int] = field(default_factory=lambda: {UPPER: 0, LOWER: 0, ATOMIC: 0})
    value_sums: Dict[str, float] = field(default_factory=lambda: {UPPER: 0.0, LOWER: 0.0,
                                                                  ATOMIC: 0.0})
    payment_sums: Dict[str, float] = field(default_factory=lambda: {UPPER: 0.0, LOWER: 0.0,
                                                                    ATOMIC: 0.0})
    hits: Dict[str, int] = field(default_factory=lambda: {UPPER: 0, LOWER: 0, ATOMIC: 0})
    utility_sum: float = 0.0
    version: int = 0

    @property
    def n(self) -> int:
        return self.counts[UPPER] + self.counts[LOWER] + self.counts[ATOMIC]

    @property
    def mean_utility(self) -> float:
        return self.utility_sum / self.n if self.n else float('nan')

    def record(self, anchor: str, value: float, payment: float, utility: float,
               hit: bool) -> None:
        self.counts[anchor] += 1
        self.value_sums[anchor] += value
        self.payment_sums[anchor] += payment
        self.hits[anchor] += int(hit)
        self.utility_sum += utility
        self.version += 1

    def both_anchors_sampled(self) -> bool:
        return self.counts[UPPER] > 0 and self.counts[LOWER] > 0

    def mean_value(self, anchor: str) -> float:
        return self.value_sums[anchor] / self.counts[anchor]

    def mean_payment(self, anchor: str) -> float:
        return self.payment_sums[anchor] / self.counts[anchor]

    def hit_rate(self, anchor: str) -> float:
        return self.hits[anchor] / self.counts[anchor]


def confidence_radius(stats: CellStats, cfg: ZoomConfig, context: str = SELECTION) -> float:
    """
    rad = sqrt(c_rad ln T / n) in theoretical mode; c_select / sqrt(n) or c_zoom / sqrt(n)
    in constant mode depending on the rule asking. Infinite when n = 0.
    """
    n = stats.n
    if n == 0:
        return math.inf
    if cfg.mode == 'theoretical':
        return math.sqrt(cfg.c_rad * math.log(cfg.horizon) / n)
    constant = cfg.c_select if context == SELECTION else cfg.c_zoom
    return constant / math.sqrt(n)


def virtual_width_estimate(stats: CellStats, anchors: Anchors, cfg: ZoomConfig) -> float:
    """
    W = (V+ - P-) - (V- - P+), or p+ S- - p- S+ for two-outcome inventory pricing.

    Zero while either anchor is unsampled. Not clamped.

    Raises:
        ValueError: for an atomic cell
    """
    if anchors.atomic:
        raise ValueError("Virtual width estimate needs a composite cell")
    if not stats.both_anchors_sampled():
        return 0.0
    if cfg.width_estimator == 'inventory_two_outcome':
        p_low = anchors.lower.increments[0]
        p_high = anchors.upper.increments[0]
        return p_high * stats.hit_rate(LOWER) - p_low * stats.hit_rate(UPPER)
    return ((stats.mean_value(UPPER) - stats.mean_payment(LOWER))
            - (stats.mean_value(LOWER) - stats.mean_payment(UPPER)))


def index(stats: CellStats, anchors: Anchors, cfg: ZoomConfig) -> float:
    """Upper confidence bound on the utility of a cell; infinite when unplayed."""
    if stats.n == 0:
        return math.inf
    rad = confidence_radius(stats, cfg, SELECTION)
    if anchors.atomic:
        return stats.mean_utility + rad
    return (stats.mean_utility + virtual_width_estimate(stats, anchors, cfg)
            + cfg.multiplier * rad)


def should_zoom(stats: CellStats, anchors: Anchors, cfg: ZoomConfig, depth: int = 0) -> bool:
    """
    Zooming rule: composite, both anchors sampled and k * rad < W.

    A cell at the depth cap has no children, so it never zooms and stays a coin-flip cell.
    """
    if depth >= cfg.depth_cap:
        return False
    if anchors.atomic or not stats.both_anchors_sampled():
        return False
    rad = confidence_radius(stats, cfg, ZOOMING)
    return cfg.multiplier * rad < virtual_width_estimate(stats, anchors, cfg)


class ZoomingAlgorithm:
    """
    State and rules of one zooming run.

    The active set starts as {root}. Selection uses a max-heap keyed by
    (-index, depth, corner, version); an entry is stale once its cell is inactive or its
    statistics have moved on, and stale entries are discarded lazily.
    """

    def __init__(self, env: SupplyModel, candidates: CandidateSet, cfg: ZoomConfig,
                 on_round: Optional[Callable[['ZoomingAlgorithm', RoundLog], None]] = None):
        cfg.validate(env.m)
        self.env = env
        self.candidates = candidates
        self.cfg = cfg
        self.on_round = on_round

        self.t = 0
        self.cumulative_utility = 0.0
        self.stats: Dict[Cell, CellStats] = {}
        self.anchors: Dict[Cell, Anchors] = {}
        self.active: Dict[Cell, None] = {}
        self.zoom_events: List[Tuple[int, Cell]] = []
        self._heap: List[Tuple[float, int, Tuple[int, ...], int, Cell]] = []

        self._candidate_keys: Optional[np.ndarray] = None
        self._bounds: Optional[Tuple[np.ndarray, np.ndarray, List[Cell]]] = None
        if cfg.debug_asserts and candidates.finite:
            self._candidate_keys = candidates.candidate_keys(env.m)

        self._activate(Cell.root(env.m))

    # ── Active set ──────────────────────────────────────────

    def _activate(self, cell: Cell) -> None:
        self.anchors[cell] = anchors_of(self.candidates, cell)
        self.stats[cell] = CellStats()
        self.active[cell] = None
        self._push(cell)
        self._bounds = None

    def _push(self, cell: Cell) -> None:
        stats = self.stats[cell]
        key = -index(stats, self.anchors[cell], self.cfg)
        heapq.heappush(self._heap, (key, cell.depth, cell.corner, stats.version, cell))

    def select_cell(self) -> Cell:
        """Active cell with the largest index; ties by smaller depth then smaller corner."""
        while self._heap:
            _, _, _, version, cell = self._heap[0]
            if cell in self.active and self.stats[cell].version == version:
                return cell
            heapq.heappop(self._heap)
        raise RuntimeError("No active cell left to select")

    def _zoom_in(self, cell: Cell) -> List[Cell]:
        del self.active[cell]
        children = [c for c in quadrants(cell, self.cfg.depth_cap)
                    if self.candidates.count(c).relevant]
        for child in children:
            self._activate(child)
        self.zoom_events.append((self.t, cell))
        logger.debug(f"Round {self.t}: zoomed into {cell}, {len(children)} children active")
        return children

    # ── Rounds ──────────────────────────────────────────────

    def step(self, rng: np.random.Generator) -> RoundLog:
        """Play one round and apply the zooming rule to the selected cell."""
        if self.t >= self.cfg.horizon:
            raise RuntimeError(f"Horizon {self.cfg.horizon} already reached")
        self.t += 1

        cell = self.select_cell()
        anchors = self.anchors[cell]
        if anchors.atomic:
            side, contract = ATOMIC, anchors.lower
        elif rng.random() < 0.5:
            side, contract = UPPER, anchors.upper
        else:
            side, contract = LOWER, anchors.lower

        result = self.env.play_round(contract, rng)
        stats = self.stats[cell]
        stats.record(side, result.value, result.payment, result.utility, result.outcome != 0)
        self.cumulative_utility += result.utility

        zoomed = should_zoom(stats, anchors, self.cfg, cell.depth)
        if zoomed:
            self._zoom_in(cell)
        else:
            self._push(cell)

        log = RoundLog(
            t=self.t,
            cell=cell.notation,
            anchor=side,
            increments=contract.increments,
            outcome=result.outcome,
            value=result.value,
            payment=result.payment,
            utility=result.utility,
            zoomed=zoomed,
            active_cell_count=len(self.active),
        )
        if self.cfg.debug_asserts:
            self.check_invariants()
        if self.on_round is not None:
            self.on_round(self, log)
        return log

    # ── Diagnostics ─────────────────────────────────────────

    def _active_bounds(self) -> Tuple[np.ndarray, np.ndarray, List[Cell]]:
        if self._bounds is None:
            cells = list(self.active)
            pairs = [self.candidates.cell_key_bounds(c) for c in cells]
            lower = np.array([lo for lo, _ in pairs])
            upper = np.array([hi for _, hi in pairs])
            self._bounds = (lower, upper, cells)
        return self._bounds

    def check_invariants(self) -> None:
        """
        Active cells are relevant, cover every candidate, and no active composite cell
        with both anchors sampled has W > k * rad.
        Cells at the depth cap are exempt from the width check.

        Raises:
            InvariantViolation: on the first failure
        """
        for cell in self.active:
            if not self.candidates.count(cell).relevant:
                raise InvariantViolation("active cell contains no candidate", cell, self.t)

        if self._candidate_keys is not None:
            lower, upper, _ = self._active_bounds()
            keys = self._candidate_keys
            inside = np.all((keys[:, None, :] >= lower[None, :, :])
                            & (keys[:, None, :] <= upper[None, :, :]), axis=2)
            uncovered = np.flatnonzero(~inside.any(axis=1))
            if len(uncovered):
                raise InvariantViolation(
                    f"candidate {keys[uncovered[0]].tolist()} is in no active cell", None, self.t)

        for cell in self.active:
            anchors, stats = self.anchors[cell], self.stats[cell]
            at_cap = cell.depth >= self.cfg.depth_cap
            if anchors.atomic or at_cap or not stats.both_anchors_sampled():
                continue
            width = virtual_width_estimate(stats, anchors, self.cfg)
            bound = self.cfg.multiplier * confidence_radius(stats, self.cfg, ZOOMING)
            if width > bound:
                raise InvariantViolation(
                    f"virtual width estimate {width:.6g} exceeds {bound:.6g}", cell, self.t)

    def coin_flags(self) -> List[str]:
        """Cells whose +/- anchor counts differ by more than coin_flag_sigmas * sqrt(n)."""
        flags = []
        for cell, stats in self.stats.items():
            n = stats.counts[UPPER] + stats.counts[LOWER]
            if n == 0:
                continue
            gap = abs(stats.counts[UPPER] - stats.counts[LOWER])
            if gap > self.cfg.coin_flag_sigmas * math.sqrt(n):
                flags.append(f"{cell.notation} n+={stats.counts[UPPER]} n-={stats.counts[LOWER]}")
        return flags

    def run(self, rng: np.random.Generator, run_id: int = 0) -> RunRecord:
        """Play rounds until the horizon and collect the run record."""
        record = RunRecord(run_id=run_id, policy='zooming', horizon=self.cfg.horizon,
                           m=self.env.m)
        while self.t < self.cfg.horizon:
            record.append(self.step(rng))

        record.zoom_events = [(t, c.notation) for t, c in self.zoom_events]
        record.final_active = [c.notation for c in sorted(self.active)]
        record.coin_flags = self.coin_flags()
        run_log = run_logger(__name__, 'zooming', run_id)
        for flag in record.coin_flags:
            run_log.warning(f"anchor coin imbalance at {flag}")
        record.metadata = {
            'mode': self.cfg.mode,
            'c_rad': self.cfg.c_rad,
            'c_select': self.cfg.c_select,
            'c_zoom': self.cfg.c_zoom,
            'width_multiplier': self.cfg.multiplier,
            'depth_cap': self.cfg.depth_cap,
            'width_estimator': self.cfg.width_estimator,
            'candidates': self.candidates.describe(),
        }
        return record


def run_zooming(env: SupplyModel, candidates: CandidateSet, horizon: int, seed=None,
                run_id: int = 0, custom_config: Optional[Dict[str, Any]] = None,
                on_round: Optional[Callable] = None, **overrides) -> RunRecord:
    """
    Run zooming for `horizon` rounds.

    Args:
        seed: int seed or an existing numpy Generator
        overrides: ZoomConfig fields replacing the configured defaults
    """
    cfg = ZoomConfig.from_config(horizon, custom_config, **overrides)
    rng = np.random.default_rng(seed)
    algorithm = ZoomingAlgorithm(env, candidates, cfg, on_round)
    record = algorithm.run(rng, run_id)
    run_logger(__name__, 'zooming', run_id).debug(
        f"U-hat={record.time_averaged_utility:.4f}, {len(record.zoom_events)} zooms")
    return record
