"""Domain types and shared numerics for predictive systems.

A predictive system here is any callable ``ps(training, x, y)`` returning
values in [0, 1] that are monotonically increasing in ``y``.  All shipped
systems broadcast over numpy arrays ``x`` and ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Protocol, Sequence, Union, overload

import numpy as np

__all__ = [
    "ContractViolation",
    "DistributionEvaluation",
    "LabeledSequence",
    "Observation",
    "PredictiveSystem",
    "TauInterval",
    "bisect_monotone",
    "eval_on_grid",
]

DEFAULT_TOL = 1e-9
MAX_BISECT_ITER = 200


class ContractViolation(ValueError):
    """A predictive system broke the monotonicity/range axioms."""


class PredictiveSystem(Protocol):
    def __call__(self, training: "LabeledSequence", x, y): ...


@dataclass(frozen=True)
class Observation:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError(f"observation must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True, eq=False)
class LabeledSequence:
    """Ordered sequence of observations stored column-wise."""

    x: np.ndarray = field(default_factory=lambda: np.empty(0))
    y: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ: {x.size} != {y.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("observations must be finite")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "LabeledSequence":
        if len(pairs) == 0:
            return cls()
        arr = np.asarray(pairs, dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    def __len__(self) -> int:
        return self.x.size

    def __iter__(self) -> Iterator[Observation]:
        for xi, yi in zip(self.x, self.y):
            yield Observation(float(xi), float(yi))

    @overload
    def __getitem__(self, key: int) -> Observation: ...
    @overload
    def __getitem__(self, key: Union[slice, np.ndarray]) -> "LabeledSequence": ...

    def __getitem__(self, key):
        if isinstance(key, (int, np.integer)):
            return Observation(float(self.x[key]), float(self.y[key]))
        return LabeledSequence(self.x[key], self.y[key])

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledSequence):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def __add__(self, other: "LabeledSequence") -> "LabeledSequence":
        return LabeledSequence(np.concatenate([self.x, other.x]), np.concatenate([self.y, other.y]))

    def split(self, m: int) -> tuple["LabeledSequence", "LabeledSequence"]:
        """Return (training proper, calibration) = (z_1..z_m, z_{m+1}..z_n)."""
        if not 0 <= m <= len(self):
            raise ValueError(f"split index {m} outside [0, {len(self)}]")
        return self[:m], self[m:]


@dataclass(frozen=True)
class TauInterval:
    """Range of an RPS output over tau: ``lo`` at tau=0, ``hi`` at tau=1."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError(f"invalid tau interval [{self.lo}, {self.hi}]")

    def at(self, tau: float) -> float:
        return self.lo + tau * (self.hi - self.lo)


@dataclass(frozen=True, eq=False)
class DistributionEvaluation:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if grid.size == 0 or grid.shape != values.shape:
            raise ValueError("grid and values must be nonempty and of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        _check_monotone(grid, values)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def _check_monotone(grid: np.ndarray, values: np.ndarray) -> None:
    if np.any(~np.isfinite(values)) or values[0] < 0.0 or values[-1] > 1.0:
        raise ContractViolation("distribution values must lie in [0, 1]")
    bad = np.flatnonzero(np.diff(values) < 0)
    if bad.size:
        i = int(bad[0])
        y0, y1, v0, v1 = map(float, (grid[i], grid[i + 1], values[i], values[i + 1]))
        raise ContractViolation(f"non-monotone predictive distribution: F({y0!r})={v0!r} > F({y1!r})={v1!r}")


def _as_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid


def eval_on_grid(ps: PredictiveSystem, training: LabeledSequence, x: float, grid) -> DistributionEvaluation:
    """Evaluate ``ps`` trained on ``training`` at test object ``x`` over ``grid``.

    Raises ContractViolation naming the first adjacent pair that decreases.
    """
    grid = _as_grid(grid)
    values = np.broadcast_to(np.asarray(ps(training, x, grid), dtype=float), grid.shape).copy()
    return DistributionEvaluation(grid, values)


def bisect_monotone(
    f: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    mode: str = "last-below",
    tol: float = DEFAULT_TOL,
) -> float:
    """Locate a level crossing of an increasing function by bisection.

    ``mode="last-below"`` approximates ``sup{y : f(y) < target}`` and
    ``mode="first-above"`` approximates ``inf{y : f(y) > target}``.  On a
    plateau ``f == target`` these are its left and right edges.  When the set
    is empty inside the bracket the nearer bracket edge is returned
    (``lo`` for last-below, ``hi`` for first-above).
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if mode not in ("last-below", "first-above"):
        raise ValueError(f"unknown mode {mode!r}")
    if not lo < hi:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    flo, fhi = float(f(lo)), float(f(hi))
    if not flo <= target <= fhi:
        raise ArithmeticError(f"target {target} outside [f(lo), f(hi)] = [{flo}, {fhi}]")

    if mode == "last-below":
        inside = lambda v: v < target  # noqa: E731
        if not inside(flo):
            return float(lo)
    else:
        inside = lambda v: v <= target  # noqa: E731
        if not inside(flo):
            return float(lo)
        if inside(fhi):
            return float(hi)

    # invariant: inside(f(a)) and not inside(f(b))
    a, b = float(lo), float(hi)
    for _ in range(MAX_BISECT_ITER):
        if b - a <= tol:
            break
        mid = a + 0.5 * (b - a)
        if mid <= a or mid >= b:
            # bracket at float resolution
            break
        if inside(float(f(mid))):
            a = mid
        else:
            b = mid
    else:
        raise ArithmeticError(f"bisection did not converge within {MAX_BISECT_ITER} iterations")
    return a + 0.5 * (b - a)
