"""
Outcome spaces and contracts in increment representation.

A monotone contract pays x(0) = 0 on the null outcome and x(pi) = w_1 + ... + w_pi
on outcome pi, where w is the vector of per-outcome payment increments. Contracts
whose increments lie in [0, 1]^m are weakly bounded; they are bounded when the
increments also sum to at most 1.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

BOUND_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OutcomeSpace:
    """Requester values v(0..m) of the outcomes, null outcome first."""

    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, 'values', values)

        if len(values) < 2:
            raise ValueError("An outcome space needs the null outcome and at least one more")
        if values[0] != 0.0:
            raise ValueError(f"The null outcome must have value 0, got {values[0]}")
        if any(b < a for a, b in zip(values, values[1:])):
            raise ValueError(f"Outcome values must be non-decreasing, got {values}")
        if any(v < 0 or v > 1 for v in values):
            raise ValueError(f"Outcome values must lie in [0, 1], got {values}")

    @property
    def m(self) -> int:
        """Number of non-null outcomes."""
        return len(self.values) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class Contract:
    """A weakly bounded monotone contract, stored as payment increments."""

    increments: Tuple[float, ...]

    def __post_init__(self) -> None:
        increments = tuple(float(w) for w in self.increments)
        object.__setattr__(self, 'increments', increments)

        if not increments:
            raise ValueError("A contract needs at least one increment")
        for i, w in enumerate(increments, start=1):
            if w < 0:
                raise ValueError(f"Increment {i} is negative ({w}); contracts must be monotone")
            if w > 1 + BOUND_TOLERANCE:
                raise ValueError(f"Increment {i} exceeds 1 ({w}); contract is not weakly bounded")

    @classmethod
    def null(cls, m: int) -> 'Contract':
        """The contract paying nothing on every outcome."""
        return cls((0.0,) * m)

    @classmethod
    def from_payments(cls, payments: Sequence[float]) -> 'Contract':
        """
        Build a contract from its payment vector x(0..m).

        Raises:
            ValueError: if x(0) != 0 or the payments are not non-decreasing
        """
        payments = [float(p) for p in payments]
        if payments[0] != 0.0:
            raise ValueError("The null outcome must be paid 0")
        return cls(tuple(b - a for a, b in zip(payments, payments[1:])))

    @property
    def m(self) -> int:
        return len(self.increments)

    @property
    def payments(self) -> np.ndarray:
        """Payment vector x(0..m) with x(0) = 0."""
        return np.concatenate(([0.0], np.cumsum(self.increments)))

    @property
    def is_bounded(self) -> bool:
        """True iff every payment lies in [0, 1]."""
        return sum(self.increments) <= 1 + BOUND_TOLERANCE

    @property
    def label(self) -> str:
        """Compact textual form used in logs and CSV rows, e.g. '(0.25,0.5)'."""
        return "(" + ",".join(f"{w:.6g}" for w in self.increments) + ")"


def dominates(a: Contract, b: Contract) -> bool:
    """
    Pointwise dominance in increment space: a >= b component-wise.

    Raises:
        ValueError: if the contracts have different dimensions
    """
    if a.m != b.m:
        raise ValueError(f"Cannot compare contracts of dimension {a.m} and {b.m}")
    return all(wa >= wb for wa, wb in zip(a.increments, b.increments))


def increments_to_payments(increments: np.ndarray) -> np.ndarray:
    """Vectorized increment -> payment conversion for an (N, m) array."""
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    zeros = np.zeros((increments.shape[0], 1))
    return np.hstack([zeros, np.cumsum(increments, axis=1)])
