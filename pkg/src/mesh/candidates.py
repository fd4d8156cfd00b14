"""
Candidate contract sets and their interaction with dyadic cells.

Three variants:
  - UniformMesh(delta): increment vectors on the delta-lattice with coordinate sum <= 1
  - FullSpace: every increment vector with coordinate sum <= 1, split down to a depth cap
  - ExplicitList: a caller-supplied finite list of contracts

Lattice counting for UniformMesh is done in exact integer arithmetic on grid indices.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.mesh.cells import Cell
from src.model.contracts import Contract
from src.utils.helpers import resolve_config, validate_unit_interval

# Rational approximation of the mesh step; 1e-12 rounding of delta is absorbed here
MAX_DENOMINATOR = 10 ** 9


class CountKind(str, Enum):
    ZERO = 'zero'
    ONE = 'one'
    MANY = 'many'


@dataclass(frozen=True)
class CandidateCount:
    """Candidates in a closed cell: none, exactly one (with the contract), or more."""

    kind: CountKind
    contract: Optional[Contract] = None

    @property
    def relevant(self) -> bool:
        return self.kind != CountKind.ZERO

    @property
    def atomic(self) -> bool:
        return self.kind == CountKind.ONE


@dataclass(frozen=True)
class Anchors:
    """Posted contracts of a cell: (lower, upper) corners, or the single candidate."""

    lower: Contract
    upper: Optional[Contract] = None

    @property
    def atomic(self) -> bool:
        return self.upper is None


class CandidateSet(ABC):
    """Base class of candidate contract sets."""

    name: str = 'abstract'
    finite: bool = True

    @abstractmethod
    def count(self, cell: Cell) -> CandidateCount:
        """Classify a closed cell as containing zero, one or many candidates."""

    def candidate_keys(self, m: int) -> np.ndarray:
        """All candidates in a comparison space shared with cell_key_bounds."""
        raise ValueError(f"{self.name} candidate set is not finite")

    def cell_key_bounds(self, cell: Cell) -> Tuple[np.ndarray, np.ndarray]:
        """Closed bounds of a cell in the space of candidate_keys."""
        return cell.lower, cell.upper

    def increments_array(self, m: int) -> np.ndarray:
        """All candidates as an (N, m) increment array, lexicographic order."""
        raise ValueError(f"{self.name} candidate set is not finite")

    def describe(self) -> Dict[str, Any]:
        return {'name': self.name}


class UniformMesh(CandidateSet):
    """
    Monotone bounded contracts whose payments are integer multiples of delta.

    Delta need not divide 1: the lattice is {delta * a : a in N^m, sum(a) <= floor(1/delta)}.
    """

    name = 'uniform_mesh'

    def __init__(self, delta: float):
        if not 0 < delta <= 1:
            raise ValueError(f"Mesh step must lie in (0, 1], got {delta}")
        self.delta = float(delta)
        self.step = Fraction(delta).limit_denominator(MAX_DENOMINATOR)
        self.levels = int(math.floor(1 / self.step))

    @property
    def divides_one(self) -> bool:
        return self.step.denominator % self.step.numerator == 0

    def index_ranges(self, cell: Cell) -> Tuple[List[int], List[int]]:
        """Per-axis inclusive lattice index ranges [lo_i, hi_i] inside the closed cell."""
        p, q = self.step.numerator, self.step.denominator
        scale_p = cell.scale * p
        lo = [-((-k * q) // scale_p) for k in cell.corner]
        hi = [min(((k + 1) * q) // scale_p, self.levels) for k in cell.corner]
        return lo, hi

    def count(self, cell: Cell) -> CandidateCount:
        lo, hi = self.index_ranges(cell)
        if any(a > b for a, b in zip(lo, hi)) or sum(lo) > self.levels:
            return CandidateCount(CountKind.ZERO)
        if sum(lo) == self.levels or lo == hi:
            return CandidateCount(CountKind.ONE, self.contract_at(lo))
        return CandidateCount(CountKind.MANY)

    def contract_at(self, index: Sequence[int]) -> Contract:
        return Contract(tuple(float(a * self.step) for a in index))

    def lattice(self, m: int) -> Iterator[Tuple[int, ...]]:
        """Lattice indices with sum <= levels, lexicographic."""
        def extend(prefix: Tuple[int, ...], budget: int) -> Iterator[Tuple[int, ...]]:
            if len(prefix) == m:
                yield prefix
                return
            for a in range(budget + 1):
                yield from extend(prefix + (a,), budget - a)
        return extend((), self.levels)

    def candidate_keys(self, m: int) -> np.ndarray:
        return np.array(list(self.lattice(m)), dtype=np.int64).reshape(-1, m)

    def cell_key_bounds(self, cell: Cell) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.index_ranges(cell)
        return np.asarray(lo, dtype=np.int64), np.asarray(hi, dtype=np.int64)

    def increments_array(self, m: int) -> np.ndarray:
        return self.candidate_keys(m) * self.step.numerator / self.step.denominator

    def size(self, m: int) -> int:
        """C(levels + m, m)."""
        return math.comb(self.levels + m, m)

    def describe(self) -> Dict[str, Any]:
        return {'name': self.name, 'delta': self.delta, 'levels': self.levels,
                'divides_one': self.divides_one}


class FullSpace(CandidateSet):
    """All bounded monotone contracts; cells at the depth cap are atomic."""

    name = 'full_space'
    finite = False

    def __init__(self, depth_cap: Optional[int] = None,
                 custom_config: Optional[Dict[str, Any]] = None):
        if depth_cap is None:
            depth_cap = int(resolve_config(custom_config)['mesh']['depth_cap'])
        self.depth_cap = int(depth_cap)

    def count(self, cell: Cell) -> CandidateCount:
        if sum(cell.corner) > cell.scale:
            return CandidateCount(CountKind.ZERO)
        if cell.depth >= self.depth_cap:
            return CandidateCount(CountKind.ONE, Contract(tuple(cell.lower)))
        return CandidateCount(CountKind.MANY)

    def describe(self) -> Dict[str, Any]:
        return {'name': self.name, 'depth_cap': self.depth_cap}


class ExplicitList(CandidateSet):
    """A finite, caller-supplied list of contracts."""

    name = 'explicit_list'

    def __init__(self, contracts: Sequence[Contract]):
        if not contracts:
            raise ValueError("An explicit candidate list cannot be empty")
        self.contracts = sorted(set(contracts), key=lambda c: c.increments)
        dims = {c.m for c in self.contracts}
        if len(dims) != 1:
            raise ValueError(f"Candidates have mixed dimensions {sorted(dims)}")
        self._keys = np.array([c.increments for c in self.contracts], dtype=float)

    def count(self, cell: Cell) -> CandidateCount:
        inside = np.all((self._keys >= cell.lower) & (self._keys <= cell.upper), axis=1)
        hits = np.flatnonzero(inside)
        if len(hits) == 0:
            return CandidateCount(CountKind.ZERO)
        if len(hits) == 1:
            return CandidateCount(CountKind.ONE, self.contracts[hits[0]])
        return CandidateCount(CountKind.MANY)

    def candidate_keys(self, m: int) -> np.ndarray:
        return self._keys

    def increments_array(self, m: int) -> np.ndarray:
        return self._keys.copy()

    def describe(self) -> Dict[str, Any]:
        return {'name': self.name, 'size': len(self.contracts)}


def count_candidates(candidates: CandidateSet, cell: Cell) -> CandidateCount:
    """Zero, one (with the contract) or many candidates in the closed cell."""
    return candidates.count(cell)


def anchors_of(candidates: CandidateSet, cell: Cell,
               count: Optional[CandidateCount] = None) -> Anchors:
    """
    Anchors of a relevant cell.

    Raises:
        ValueError: if the cell holds no candidate
    """
    count = count or candidates.count(cell)
    if not count.relevant:
        raise ValueError(f"Cell {cell} contains no candidate contract")
    if count.atomic:
        return Anchors(count.contract)
    return Anchors(Contract(tuple(cell.lower)), Contract(tuple(cell.upper)))


def mesh_enumerate(mesh: UniformMesh, m: int, strict: bool = True) -> List[Contract]:
    """
    Every candidate of a uniform mesh in lexicographic order of increments.

    Raises:
        ValueError: if strict and delta does not divide 1, or m < 1
    """
    if m < 1:
        raise ValueError(f"Need m >= 1, got {m}")
    if strict and not mesh.divides_one:
        raise ValueError(f"Mesh step {mesh.delta} does not divide 1")
    return [mesh.contract_at(index) for index in mesh.lattice(m)]


def build_candidate_set(spec: Dict[str, Any],
                        custom_config: Optional[Dict[str, Any]] = None) -> CandidateSet:
    """Candidate set from {"name": "uniform_mesh", "delta": ...} style specs."""
    name = spec.get('name', 'uniform_mesh')
    if name == 'uniform_mesh':
        validate_unit_interval(float(spec['delta']), 'delta')
        return UniformMesh(float(spec['delta']))
    if name == 'full_space':
        return FullSpace(spec.get('depth_cap'), custom_config)
    if name == 'explicit_list':
        return ExplicitList([Contract(tuple(c)) for c in spec['contracts']])
    raise ValueError(f"Unknown candidate set '{name}'")
