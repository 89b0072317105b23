"""Scoring and validity checks: CRPS, PITs, semi-online protocol, KS machinery."""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .calibrators import SplitSpec, _check_tau, icps_evaluate
from .core import DistributionEvaluation, LabeledSequence, PredictiveSystem, bisect_monotone

__all__ = [
    "BOUND_SLACK",
    "ConvergenceReport",
    "GridWidthWarning",
    "PitSample",
    "crps",
    "crps_batch",
    "kolmogorov_cdf",
    "kolmogorov_pvalue",
    "kolmogorov_quantile",
    "ks_statistic",
    "pit",
    "prop1_check",
    "semi_online_pits",
]

BOUND_SLACK = 1e-12
WIDTH_EPS = 1e-3


class GridWidthWarning(UserWarning):
    """The evaluation grid truncates a non-negligible part of the distribution."""


@dataclass(frozen=True, eq=False)
class PitSample:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if np.any(~((v >= 0.0) & (v <= 1.0))):
            raise ValueError("PIT values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def pit(dist_value_at_true_label: float) -> float:
    v = float(dist_value_at_true_label)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"PIT value must lie in [0, 1], got {v}")
    return v


def crps_batch(grid, values, ys) -> tuple[np.ndarray, int]:
    """CRPS of many distributions sharing one label grid.

    ``values`` has shape ``(T, G)`` with row ``t`` the CDF of forecast ``t``
    at ``grid``; ``ys`` are the realized labels.  The CDF is taken as linear
    between grid points and the integral of ``(F - 1{. >= y})^2`` over the
    grid span is computed with the trapezoid rule, splitting the cell that
    contains ``y``.

    Returns the scores and the number of rows whose grid edges leave more
    than ``1e-3`` of mass outside (``F[0] > 1e-3`` or ``F[-1] < 1 - 1e-3``).
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if values.shape != (ys.size, grid.size):
        raise ValueError(f"values shape {values.shape} != ({ys.size}, {grid.size})")
    if grid.size < 2:
        raise ValueError("grid needs at least two points")
    if np.any((ys < grid[0]) | (ys > grid[-1])):
        raise ValueError("label outside the evaluation grid; widen the grid")

    dg = np.diff(grid)
    left = values**2
    right = (1.0 - values) ** 2
    zero = np.zeros((values.shape[0], 1))
    cum_l = np.concatenate([zero, np.cumsum(0.5 * (left[:, :-1] + left[:, 1:]) * dg, axis=1)], axis=1)
    cum_r = np.concatenate([zero, np.cumsum(0.5 * (right[:, :-1] + right[:, 1:]) * dg, axis=1)], axis=1)

    rows = np.arange(ys.size)
    j = np.minimum(np.searchsorted(grid, ys, side="right") - 1, grid.size - 2)
    g0, g1 = grid[j], grid[j + 1]
    v0, v1 = values[rows, j], values[rows, j + 1]
    fy = v0 + (v1 - v0) * (ys - g0) / (g1 - g0)
    out = (
        cum_l[rows, j]
        + 0.5 * (v0**2 + fy**2) * (ys - g0)
        + 0.5 * ((1.0 - fy) ** 2 + (1.0 - v1) ** 2) * (g1 - ys)
        + (cum_r[:, -1] - cum_r[rows, j + 1])
    )
    narrow = int(np.count_nonzero((values[:, 0] > WIDTH_EPS) | (values[:, -1] < 1.0 - WIDTH_EPS)))
    return out, narrow


def crps(dist: DistributionEvaluation, y: float) -> float:
    """Continuous ranked probability score of one gridded distribution."""
    scores, narrow = crps_batch(dist.grid, dist.values[None, :], [y])
    if narrow:
        warnings.warn(
            f"grid [{dist.grid[0]}, {dist.grid[-1]}] truncates the distribution "
            f"(F at edges: {dist.values[0]:.3g}, {dist.values[-1]:.3g})",
            GridWidthWarning,
            stacklevel=2,
        )
    return float(scores[0])


def semi_online_pits(
    base: PredictiveSystem,
    training: LabeledSequence,
    split: SplitSpec,
    tests: LabeledSequence,
    taus: Sequence[float],
) -> PitSample:
    """PITs of test observations processed one at a time.

    Each test observation is scored against the calibration sequence and then
    appended to it, so successive PITs are independent under exchangeability.
    The base system is trained once on the training sequence proper.
    """
    taus = np.asarray(taus, dtype=float).reshape(-1)
    if taus.size != len(tests):
        raise ValueError(f"need one tau per test observation ({len(tests)}), got {taus.size}")
    _check_tau(taus)
    split.validate(len(training))
    if len(tests) == 0:
        return PitSample(np.empty(0))
    proper, calibration = training.split(split.m)
    if len(calibration):
        calib = np.asarray(base(proper, calibration.x, calibration.y), dtype=float).reshape(-1)
    else:
        calib = np.empty(0)
    test_scores = np.asarray(base(proper, tests.x, tests.y), dtype=float).reshape(-1)

    pool = sorted(calib.tolist())
    out = np.empty(len(tests))
    for i, (a, tau) in enumerate(zip(test_scores.tolist(), taus.tolist())):
        below = bisect.bisect_left(pool, a)
        equal = bisect.bisect_right(pool, a) - below
        out[i] = (below + tau * equal + tau) / (len(pool) + 1)
        bisect.insort(pool, a)
    return PitSample(out)


def ks_statistic(sample) -> float:
    """``sup_t |G_n(t) - t|`` for the empirical CDF ``G_n`` of a [0, 1] sample."""
    u = np.sort(np.asarray(getattr(sample, "values", sample), dtype=float).reshape(-1))
    n = u.size
    if n == 0:
        raise ValueError("KS statistic of an empty sample")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def kolmogorov_cdf(t: float) -> float:
    """Distribution function of the supremum of a Brownian bridge's absolute value.

    Uses the alternating series ``1 - 2 sum (-1)^(j-1) exp(-2 j^2 t^2)`` for
    ``t >= 1`` and the equivalent theta-function series, which converges fast
    near zero, below that.  Both are truncated once a term drops below 1e-12.
    """
    if t < 0:
        raise ValueError("kolmogorov_cdf is defined for t >= 0")
    if t == 0:
        return 0.0
    if math.isinf(t):
        return 1.0
    total = 0.0
    j = 1
    if t < 1.0:
        c = math.pi**2 / (8.0 * t * t)
        while True:
            term = math.exp(-((2 * j - 1) ** 2) * c)
            total += term
            if term < 1e-12:
                break
            j += 1
        return min(1.0, math.sqrt(2.0 * math.pi) / t * total)
    while True:
        term = math.exp(-2.0 * j * j * t * t)
        total += term if j % 2 else -term
        if term < 1e-12:
            break
        j += 1
    return max(0.0, 1.0 - 2.0 * total)


def kolmogorov_pvalue(ks: float, n: int) -> float:
    """Asymptotic p-value ``1 - K(sqrt(n) * ks)``."""
    return 1.0 - kolmogorov_cdf(math.sqrt(n) * ks)


def kolmogorov_quantile(p: float, tol: float = 1e-12) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    return bisect_monotone(kolmogorov_cdf, p, 0.0, 10.0, "first-above", tol)


@dataclass(frozen=True)
class ConvergenceReport:
    """Distance between the ideal conformal output and the PIT empirical CDF."""

    n: int
    sup_discrepancy: float
    bound: float
    scaled_ks: float

    @property
    def within_bound(self) -> bool:
        return self.sup_discrepancy <= self.bound + BOUND_SLACK


def _invert(oracle: Callable, x: float, t: np.ndarray) -> np.ndarray:
    ppf = getattr(oracle, "ppf", None)
    if ppf is not None:
        return np.asarray(ppf(x, t), dtype=float)

    def f(y):
        return float(oracle(x, y))

    lo, hi = -1.0, 1.0
    for _ in range(200):
        if f(lo) <= t.min() and f(hi) >= t.max():
            break
        lo, hi = 2.0 * lo, 2.0 * hi
    else:
        raise ArithmeticError(f"could not bracket the oracle quantiles at x={x}")
    return np.array([bisect_monotone(f, ti, lo, hi, "first-above") for ti in t])


def prop1_check(oracle: Callable, data: LabeledSequence, x: float, tau: float, t_grid) -> ConvergenceReport:
    """Compare the ideal conformal output, read in the PIT scale, with ``G_n``.

    ``oracle(x, y)`` must be continuous and strictly increasing in ``y``.
    The ideal conformal output at ``A_x^{-1}(t)`` is compared with the
    empirical CDF of the training PITs at ``t`` for every ``t`` in
    ``t_grid``; the sup of the gap never exceeds ``1/(n+1)``.
    """
    n = len(data)
    if n < 1:
        raise ValueError("prop1_check needs at least one observation")
    t = np.asarray(t_grid, dtype=float).reshape(-1)
    if np.any((t <= 0.0) | (t >= 1.0)):
        raise ValueError("t_grid must lie inside (0, 1)")
    ys = _invert(oracle, x, t)
    if not np.all(np.isfinite(ys)):
        raise ArithmeticError("oracle inversion produced non-finite labels")
    conformal = np.asarray(icps_evaluate(oracle, data, x, ys, tau), dtype=float)
    pits = np.sort(np.asarray(oracle(data.x, data.y), dtype=float).reshape(-1))
    ecdf = np.searchsorted(pits, t, side="right") / n
    return ConvergenceReport(
        n=n,
        sup_discrepancy=float(np.max(np.abs(conformal - ecdf))),
        bound=1.0 / (n + 1),
        scaled_ks=math.sqrt(n) * ks_statistic(pits),
    )
