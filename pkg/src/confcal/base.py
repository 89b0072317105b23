"""Base predictive systems usable as split conformity measures.

Every system is a callable ``(training, x, y) -> values in [0, 1]`` that
broadcasts over array ``x`` and ``y``.  Conditional CDFs of the toy model,
which need no training data, are callables ``(x, y)``; wrap them with
:func:`as_predictive_system` to use them as conformity measures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit, ndtr, ndtri

from .core import ContractViolation, LabeledSequence

__all__ = [
    "NwParams",
    "ResidualParams",
    "OracleParams",
    "NadarayaWatson",
    "ResidualConformity",
    "ToyOracle",
    "MiscalibratedOracle",
    "nw_evaluate",
    "nw_weights",
    "residual_conformity",
    "oracle_cdf",
    "miscalibrated_cdf",
    "dempster_hill_conformity",
    "as_predictive_system",
    "square",
]


@dataclass(frozen=True)
class NwParams:
    g: float
    h: float

    def __post_init__(self):
        if not (self.g > 0 and self.h > 0):
            raise ValueError(f"bandwidths must be positive, got g={self.g}, h={self.h}")


@dataclass(frozen=True)
class ResidualParams:
    g: float
    sigma_floor: float = 1e-3

    def __post_init__(self):
        if not (self.g > 0 and self.sigma_floor > 0):
            raise ValueError("g and sigma_floor must be positive")


@dataclass(frozen=True)
class OracleParams:
    """Conditional law ``Y | X=x ~ N(slope*x, (noise_ratio*|x|)^2)``."""

    slope: float = 2.0
    noise_ratio: float = 0.5
    sigma_floor: float = 1e-6

    def __post_init__(self):
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")
        if self.noise_ratio < 0:
            raise ValueError("noise_ratio must be nonnegative")

    def scale(self, x):
        return np.maximum(self.noise_ratio * np.abs(x), self.sigma_floor)


def _require_nonempty(training: LabeledSequence) -> None:
    if len(training) == 0:
        raise ValueError("training sequence must be nonempty")


def nw_weights(train_x: np.ndarray, x, g: float) -> np.ndarray:
    """Normalized Gaussian kernel weights, shape ``x.shape + (n,)``.

    The log-kernel is shifted by its maximum before exponentiating, which
    leaves the ratio unchanged but keeps far-away test objects from
    underflowing every weight to zero.
    """
    x = np.asarray(x, dtype=float)
    logk = -0.5 * ((x[..., None] - train_x) / g) ** 2
    logk -= logk.max(axis=-1, keepdims=True)
    k = np.exp(logk)
    total = k.sum(axis=-1, keepdims=True)
    bad = ~np.isfinite(total) | (total <= 0)
    if np.any(bad):
        k = np.where(bad, 1.0, k)
        total = k.sum(axis=-1, keepdims=True)
    return k / total


def nw_evaluate(training: LabeledSequence, x, y, params: NwParams):
    """Nadaraya-Watson predictive distribution ``F(y | x)``.

    A kernel-weighted average of logistic CDFs centred at the training labels,
    with Gaussian object kernel of bandwidth ``g`` and sigmoid label scale ``h``.
    """
    _require_nonempty(training)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    w = nw_weights(training.x, x, params.g)
    s = expit((y[..., None] - training.y) / params.h)
    out = np.clip(np.einsum("...i,...i->...", w, s), 0.0, 1.0)
    return out if out.ndim else float(out)


class NadarayaWatson:
    """Nadaraya-Watson predictive system as a reusable callable."""

    def __init__(self, g: float, h: float):
        self.params = NwParams(g, h)

    def __repr__(self):
        return f"NadarayaWatson(g={self.params.g}, h={self.params.h})"

    def __call__(self, training: LabeledSequence, x, y):
        return nw_evaluate(training, x, y, self.params)

    def cdf_matrix(self, training: LabeledSequence, xs, grid) -> np.ndarray:
        """``F(grid[j] | xs[i])`` for all pairs, shape ``(len(xs), len(grid))``.

        Uses one matrix product instead of materialising the
        ``tests x grid x training`` tensor.
        """
        _require_nonempty(training)
        w = nw_weights(training.x, np.asarray(xs, dtype=float).reshape(-1), self.params.g)
        s = expit((np.asarray(grid, dtype=float).reshape(-1)[:, None] - training.y) / self.params.h)
        return np.clip(w @ s.T, 0.0, 1.0)


def _in_sample_abs_residuals(training: LabeledSequence, g: float) -> np.ndarray:
    w = nw_weights(training.x, training.x, g)
    return np.abs(training.y - w @ training.y)


def residual_conformity(training: LabeledSequence, x, y, params: ResidualParams, _residuals=None):
    """Sigmoid of the standardized residual ``(y - yhat(x)) / sigmahat(x)``.

    ``yhat`` is the Nadaraya-Watson regression mean and ``sigmahat`` the
    kernel-smoothed mean absolute in-sample residual, floored at
    ``params.sigma_floor``.
    """
    _require_nonempty(training)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    resid = _in_sample_abs_residuals(training, params.g) if _residuals is None else _residuals
    w = nw_weights(training.x, x, params.g)
    yhat = w @ training.y
    sigma = np.maximum(w @ resid, params.sigma_floor)
    out = expit((y - yhat) / sigma)
    return out if out.ndim else float(out)


class ResidualConformity:
    """Squashed normalized-residual conformity measure.

    Keeps the in-sample residuals of the most recent training sequence, since
    calibrators evaluate the same training proper many times in a row.
    """

    def __init__(self, g: float, sigma_floor: float = 1e-3):
        self.params = ResidualParams(g, sigma_floor)
        self._cache: tuple[LabeledSequence, np.ndarray] | None = None

    def __repr__(self):
        return f"ResidualConformity(g={self.params.g}, sigma_floor={self.params.sigma_floor})"

    def __call__(self, training: LabeledSequence, x, y):
        _require_nonempty(training)
        cache = self._cache
        if cache is None or cache[0] is not training:
            cache = (training, _in_sample_abs_residuals(training, self.params.g))
            self._cache = cache
        return residual_conformity(training, x, y, self.params, _residuals=cache[1])


def oracle_cdf(x, y, params: OracleParams = OracleParams()):
    """True conditional distribution function of the toy model."""
    z = (np.asarray(y, dtype=float) - params.slope * np.asarray(x, dtype=float)) / params.scale(x)
    out = ndtr(z)
    return out if np.ndim(out) else float(out)


def square(u):
    return np.asarray(u, dtype=float) ** 2


_PHI_PROBE = np.linspace(0.0, 1.0, 257)


def _check_phi(phi: Callable) -> None:
    v = np.asarray(phi(_PHI_PROBE), dtype=float)
    if not (np.isclose(v[0], 0.0, atol=1e-12) and np.isclose(v[-1], 1.0, atol=1e-12)):
        raise ContractViolation("phi must map 0 to 0 and 1 to 1")
    if np.any(np.diff(v) <= 0):
        raise ContractViolation("phi must be strictly increasing on [0, 1]")


def miscalibrated_cdf(x, y, phi: Callable = square, params: OracleParams = OracleParams()):
    """``phi`` applied to the true conditional CDF: perfect resolution, bad calibration."""
    _check_phi(phi)
    out = np.asarray(phi(np.asarray(oracle_cdf(x, y, params))), dtype=float)
    return out if out.ndim else float(out)


class ToyOracle:
    """Conditional CDF of the toy model with an analytic quantile function."""

    def __init__(self, params: OracleParams = OracleParams()):
        self.params = params

    def __repr__(self):
        return f"ToyOracle({self.params})"

    def __call__(self, x, y):
        return oracle_cdf(x, y, self.params)

    def ppf(self, x, t):
        x = np.asarray(x, dtype=float)
        out = self.params.slope * x + self.params.scale(x) * ndtri(np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)


class MiscalibratedOracle:
    """``phi`` composed with the toy oracle, validated once at construction."""

    def __init__(self, phi: Callable = square, params: OracleParams = OracleParams()):
        _check_phi(phi)
        self.phi = phi
        self.params = params

    def __call__(self, x, y):
        out = np.asarray(self.phi(np.asarray(oracle_cdf(x, y, self.params))), dtype=float)
        return out if out.ndim else float(out)


def dempster_hill_conformity(training: LabeledSequence, x, y):
    """Object-free identity conformity, squashed into (0, 1); ignores training and x."""
    out = expit(np.asarray(y, dtype=float))
    return out if out.ndim else float(out)


def as_predictive_system(cdf: Callable) -> Callable:
    """Turn a conditional CDF ``cdf(x, y)`` into a training-independent system."""

    def ps(training, x, y):
        return cdf(x, y)

    ps.__name__ = getattr(cdf, "__name__", type(cdf).__name__)
    return ps
