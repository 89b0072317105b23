"""Conformal calibrators: split-conformal, cross-conformal and ideal.

Each calibrator turns a base predictive system (used as a conformity
measure) into a randomized predictive system whose output depends on an
extra uniform number ``tau`` supplied by the caller.  Nothing here draws
random numbers.

Ties between conformity scores are detected with exact floating-point
equality.  Conformity measures that produce gratuitous exact ties (for
instance by saturating to 0 or 1) make the tau-randomization matter more
than it should.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    DEFAULT_TOL,
    DistributionEvaluation,
    LabeledSequence,
    PredictiveSystem,
    TauInterval,
    _as_grid,
    bisect_monotone,
)

__all__ = [
    "BracketWarning",
    "FoldSpec",
    "SplitConformalSystem",
    "SplitSpec",
    "StepDistribution",
    "ccps_evaluate",
    "conformal_pvalue",
    "default_bracket",
    "icps_evaluate",
    "scps_exact",
    "scps_grid",
    "scps_pvalue",
    "step_distribution_evaluate",
    "step_tau_interval",
]


class BracketWarning(UserWarning):
    """A threshold of the exact split-conformal output hit the search bracket."""


def _check_tau(tau) -> None:
    t = np.asarray(tau, dtype=float)
    if np.any(~(t >= 0.0) | ~(t <= 1.0)):
        raise ValueError(f"tau must lie in [0, 1], got {tau}")


def conformal_pvalue(sorted_scores: np.ndarray, test_score, tau):
    """Smoothed conformal p-value against pre-sorted calibration scores.

    ``(#{a < test} + tau * #{a == test} + tau) / (len(scores) + 1)``,
    broadcasting over ``test_score`` and ``tau``.
    """
    _check_tau(tau)
    test_score = np.asarray(test_score, dtype=float)
    below = np.searchsorted(sorted_scores, test_score, side="left")
    equal = np.searchsorted(sorted_scores, test_score, side="right") - below
    out = (below + tau * (equal + 1.0)) / (sorted_scores.size + 1.0)
    return out if np.ndim(out) else float(out)


def scps_pvalue(calib_scores, test_score, tau):
    """Split-conformal output for one (or many) test scores."""
    scores = np.sort(np.asarray(calib_scores, dtype=float).reshape(-1))
    return conformal_pvalue(scores, test_score, tau)


@dataclass(frozen=True)
class SplitSpec:
    """Training sequence proper is ``z_1..z_m``; the rest is calibration."""

    m: int

    def validate(self, n: int) -> None:
        if not 0 <= self.m <= n:
            raise ValueError(f"split m={self.m} outside [0, {n}]")


class SplitConformalSystem:
    """Split-conformalized version of ``base`` on a fixed training sequence.

    Calibration scores are computed once; calls then only rank test scores.
    """

    def __init__(self, base: PredictiveSystem, training: LabeledSequence, split: SplitSpec):
        split.validate(len(training))
        self.base = base
        self.proper, self.calibration = training.split(split.m)
        if len(self.calibration):
            scores = np.asarray(base(self.proper, self.calibration.x, self.calibration.y), dtype=float)
        else:
            scores = np.empty(0)
        self.scores = np.sort(scores.reshape(-1))

    @property
    def total(self) -> int:
        return self.scores.size

    def test_scores(self, x, y):
        return np.asarray(self.base(self.proper, x, y), dtype=float)

    def __call__(self, x, y, tau):
        if self.total == 0:
            _check_tau(tau)
            return np.broadcast_to(np.asarray(tau, dtype=float), np.broadcast_shapes(np.shape(x), np.shape(y))) + 0.0
        return conformal_pvalue(self.scores, self.test_scores(x, y), tau)


def scps_grid(
    base: PredictiveSystem,
    training: LabeledSequence,
    split: SplitSpec,
    x: float,
    tau: float,
    grid,
) -> DistributionEvaluation:
    """Split-conformal predictive distribution evaluated on a label grid."""
    grid = _as_grid(grid)
    _check_tau(tau)
    system = SplitConformalSystem(base, training, split)
    values = np.broadcast_to(system(x, grid, tau), grid.shape).astype(float)
    return DistributionEvaluation(grid, values)


@dataclass(frozen=True, eq=False)
class StepDistribution:
    """Exact piecewise-constant split-conformal output.

    ``p_sorted`` are the distinct calibration scores with multiplicities
    ``counts``; the base distribution crosses ``p_sorted[j]`` between
    ``m_thresh[j]`` (last label scoring strictly below) and ``M_thresh[j]``
    (first label scoring strictly above).
    """

    p_sorted: np.ndarray
    counts: np.ndarray
    m_thresh: np.ndarray
    M_thresh: np.ndarray
    total: int
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self):
        k = self.p_sorted.size
        if not (self.counts.size == self.m_thresh.size == self.M_thresh.size == k):
            raise ValueError("step distribution arrays must have equal length")
        if int(self.counts.sum()) != self.total or k > max(self.total, 0):
            raise ValueError("counts must sum to total")
        if k and np.any(np.diff(self.p_sorted) <= 0):
            raise ValueError("scores must be strictly increasing")
        chain = np.empty(2 * k)
        chain[0::2], chain[1::2] = self.m_thresh, self.M_thresh
        if np.any(np.diff(chain) < 0):
            raise ValueError("thresholds must satisfy m_1 <= M_1 <= m_2 <= ... <= M_k")

    @property
    def k(self) -> int:
        return self.p_sorted.size


def default_bracket(training: LabeledSequence) -> tuple[float, float]:
    """``[min - 10*range, max + 10*range]`` of the labels (unit range if degenerate)."""
    lo, hi = float(training.y.min()), float(training.y.max())
    span = hi - lo if hi > lo else 1.0
    return lo - 10.0 * span, hi + 10.0 * span


def scps_exact(
    base: PredictiveSystem,
    training: LabeledSequence,
    split: SplitSpec,
    x: float,
    y_lo: float | None = None,
    y_hi: float | None = None,
    tol: float = DEFAULT_TOL,
) -> StepDistribution:
    """Exact split-conformal output as a step distribution.

    Thresholds are located by bisection on the base distribution at ``x``.
    A threshold that falls outside ``[y_lo, y_hi]`` is clamped to the
    bracket edge; the clamp is recorded in ``warnings`` and also emitted as a
    :class:`BracketWarning`.
    """
    split.validate(len(training))
    proper, calibration = training.split(split.m)
    if len(calibration) == 0:
        raise ValueError("exact split-conformal output needs a nonempty calibration sequence")
    if y_lo is None or y_hi is None:
        d_lo, d_hi = default_bracket(training)
        y_lo = d_lo if y_lo is None else y_lo
        y_hi = d_hi if y_hi is None else y_hi
    if not y_lo < y_hi:
        raise ValueError(f"empty bracket [{y_lo}, {y_hi}]")

    scores = np.asarray(base(proper, calibration.x, calibration.y), dtype=float).reshape(-1)
    p_sorted, counts = np.unique(scores, return_counts=True)

    def f(y):
        return float(base(proper, x, y))

    f_lo, f_hi = f(y_lo), f(y_hi)
    notes: list[str] = []
    m_thresh = np.empty(p_sorted.size)
    M_thresh = np.empty(p_sorted.size)
    for j, p in enumerate(p_sorted):
        if f_lo >= p:
            m_thresh[j] = y_lo
            notes.append(f"m_{j + 1} clamped to y_lo={y_lo}")
        elif f_hi < p:
            m_thresh[j] = y_hi
            notes.append(f"m_{j + 1} clamped to y_hi={y_hi}")
        else:
            m_thresh[j] = bisect_monotone(f, p, y_lo, y_hi, "last-below", tol)
        if f_hi <= p:
            M_thresh[j] = y_hi
            notes.append(f"M_{j + 1} clamped to y_hi={y_hi}")
        elif f_lo > p:
            M_thresh[j] = y_lo
            notes.append(f"M_{j + 1} clamped to y_lo={y_lo}")
        else:
            M_thresh[j] = bisect_monotone(f, p, y_lo, y_hi, "first-above", tol)

    # each threshold is only tol-accurate; restore the ordering chain
    chain = np.empty(2 * p_sorted.size)
    chain[0::2], chain[1::2] = m_thresh, M_thresh
    chain = np.maximum.accumulate(chain)
    m_thresh, M_thresh = chain[0::2].copy(), chain[1::2].copy()

    for note in notes:
        warnings.warn(note, BracketWarning, stacklevel=2)
    return StepDistribution(p_sorted, counts, m_thresh, M_thresh, int(scores.size), tuple(notes))


def _step_counts(dist: StepDistribution, y):
    cum = np.concatenate([[0], np.cumsum(dist.counts)])
    y = np.asarray(y, dtype=float)
    below_left = cum[np.searchsorted(dist.M_thresh, y, side="left")]  # M_j < y
    upto_right = cum[np.searchsorted(dist.m_thresh, y, side="right")]  # m_j <= y
    return below_left, upto_right


def step_tau_interval(dist: StepDistribution, y: float) -> TauInterval:
    """Probability interval over tau at ``y``.

    Away from the thresholds this is ``[F(y, 0), F(y, 1)]``; at a threshold
    it is the union of the intervals on either side.
    """
    lo_c, hi_c = _step_counts(dist, y)
    return TauInterval(float(lo_c) / (dist.total + 1), float(hi_c + 1) / (dist.total + 1))


def step_distribution_evaluate(dist: StepDistribution, y, tau):
    """Evaluate the step distribution at label(s) ``y`` for a given ``tau``."""
    _check_tau(tau)
    lo_c, hi_c = _step_counts(dist, y)
    out = (lo_c + tau * (hi_c + 1.0 - lo_c)) / (dist.total + 1.0)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True, eq=False)
class FoldSpec:
    """Partition of training indices into ``K >= 2`` nonempty folds."""

    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=int).reshape(-1)
        object.__setattr__(self, "assignment", a)
        if a.size == 0:
            raise ValueError("fold assignment is empty")
        if a.min() < 0:
            raise ValueError("fold ids must be nonnegative")
        sizes = np.bincount(a)
        if sizes.size < 2:
            raise ValueError("cross-conformal calibration needs at least 2 folds")
        if np.any(sizes == 0):
            raise ValueError(f"empty fold(s): {np.flatnonzero(sizes == 0).tolist()}")

    @property
    def K(self) -> int:
        return int(self.assignment.max()) + 1

    @classmethod
    def contiguous(cls, n: int, K: int) -> "FoldSpec":
        """Folds of consecutive indices with sizes differing by at most one."""
        if K < 2:
            raise ValueError("cross-conformal calibration needs at least 2 folds")
        if n < K:
            raise ValueError(f"cannot split {n} observations into {K} nonempty folds")
        return cls(np.repeat(np.arange(K), np.diff(np.linspace(0, n, K + 1).round().astype(int))))


def ccps_evaluate(
    base: PredictiveSystem,
    training: LabeledSequence,
    folds: FoldSpec,
    x: float,
    y,
    tau,
):
    """Cross-conformal output with counts pooled across folds.

    For each fold ``k`` the base system is trained on the other folds and
    fold ``k`` serves as calibration; strictly-below and tied counts are
    summed over folds and normalized by ``n + 1``.
    """
    _check_tau(tau)
    if folds.assignment.size != len(training):
        raise ValueError("fold assignment length does not match training length")
    y = np.asarray(y, dtype=float)
    below = np.zeros(y.shape)
    equal = np.zeros(y.shape)
    for k in range(folds.K):
        in_fold = folds.assignment == k
        proper, calib = training[~in_fold], training[in_fold]
        scores = np.sort(np.asarray(base(proper, calib.x, calib.y), dtype=float).reshape(-1))
        test = np.asarray(base(proper, x, y), dtype=float)
        lo = np.searchsorted(scores, test, side="left")
        below = below + lo
        equal = equal + (np.searchsorted(scores, test, side="right") - lo)
    out = (below + tau * (equal + 1.0)) / (len(training) + 1.0)
    return out if np.ndim(out) else float(out)


def icps_evaluate(oracle: Callable, training: LabeledSequence, x, y, tau):
    """Ideal conformalized system: the whole training sequence calibrates ``oracle``.

    ``oracle(x, y)`` is the true conditional distribution function.
    """
    _check_tau(tau)
    if len(training) == 0:
        out = np.broadcast_to(np.asarray(tau, dtype=float), np.broadcast_shapes(np.shape(x), np.shape(y))) + 0.0
        return out if out.ndim else float(out)
    pits = np.sort(np.asarray(oracle(training.x, training.y), dtype=float).reshape(-1))
    return conformal_pvalue(pits, oracle(x, y), tau)
