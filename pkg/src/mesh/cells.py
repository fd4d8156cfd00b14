"""
Dyadic cells of increment space [0, 1]^m.

A cell at depth j with integer corner k is the closed cube
prod_i [k_i 2^-j, (k_i + 1) 2^-j]. Cells are immutable and hashable.
"""

import itertools
import re
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

CELL_PATTERN = re.compile(r'^\s*(\d+)\s*:\s*\(([\d\s,]*)\)\s*$')


@dataclass(frozen=True, order=True)
class Cell:
    """Closed dyadic cube identified by (depth, min-corner grid coordinates)."""

    depth: int
    corner: Tuple[int, ...]

    def __post_init__(self) -> None:
        corner = tuple(int(k) for k in self.corner)
        object.__setattr__(self, 'corner', corner)
        if self.depth < 0:
            raise ValueError(f"Cell depth must be non-negative, got {self.depth}")
        if not corner:
            raise ValueError("A cell needs at least one dimension")
        scale = 1 << self.depth
        if any(k < 0 or k >= scale for k in corner):
            raise ValueError(f"Corner {corner} out of range for depth {self.depth}")

    @classmethod
    def root(cls, m: int) -> 'Cell':
        """The whole space [0, 1]^m."""
        return cls(0, (0,) * m)

    @classmethod
    def parse(cls, text: str) -> 'Cell':
        """Inverse of notation, e.g. '2:(1,3)'."""
        match = CELL_PATTERN.match(text)
        if not match:
            raise ValueError(f"Not a cell: '{text}'")
        corner = tuple(int(k) for k in match.group(2).split(',') if k.strip())
        return cls(int(match.group(1)), corner)

    @property
    def m(self) -> int:
        return len(self.corner)

    @property
    def scale(self) -> int:
        """2^depth, the number of cells per axis at this depth."""
        return 1 << self.depth

    @property
    def side(self) -> float:
        return 1.0 / self.scale

    @property
    def lower(self) -> np.ndarray:
        """Minimal corner as increments."""
        return np.asarray(self.corner, dtype=float) / self.scale

    @property
    def upper(self) -> np.ndarray:
        """Maximal corner as increments."""
        return (np.asarray(self.corner, dtype=float) + 1) / self.scale

    @property
    def notation(self) -> str:
        return f"{self.depth}:(" + ",".join(str(k) for k in self.corner) + ")"

    def __str__(self) -> str:
        return self.notation

    def contains(self, other: 'Cell') -> bool:
        """True iff `other` is this cell or one of its dyadic descendants."""
        if other.m != self.m or other.depth < self.depth:
            return False
        shift = other.depth - self.depth
        return all((k >> shift) == c for k, c in zip(other.corner, self.corner))

    def contains_point(self, increments) -> bool:
        point = np.asarray(increments, dtype=float)
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))


def quadrants(cell: Cell, depth_cap: int) -> List[Cell]:
    """
    The 2^m children of a cell, in itertools.product order of the corner bits.

    Raises:
        ValueError: if the children would exceed depth_cap
    """
    if cell.depth >= depth_cap:
        raise ValueError(f"Cell {cell} is at the depth cap {depth_cap}; cannot split")
    base = tuple(2 * k for k in cell.corner)
    return [
        Cell(cell.depth + 1, tuple(b + bit for b, bit in zip(base, bits)))
        for bits in itertools.product((0, 1), repeat=cell.m)
    ]
