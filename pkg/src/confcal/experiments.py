"""Experiment drivers behind the command-line interface.

Each driver returns a JSON-ready report ``{command, config, results,
warnings}``.  Drivers are deterministic given their config; with
``tau_mode="random"`` the randomization numbers come from the seed's
dedicated substream.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .base import MiscalibratedOracle, NadarayaWatson, ResidualConformity, ToyOracle, as_predictive_system, square
from .calibrators import FoldSpec, SplitSpec, conformal_pvalue
from .core import ContractViolation, LabeledSequence
from .datagen import ToyConfig, gen_toy, tau_draws
from .evaluation import (
    crps_batch,
    kolmogorov_pvalue,
    kolmogorov_quantile,
    ks_statistic,
    prop1_check,
    semi_online_pits,
)

__all__ = [
    "HeatmapConfig",
    "SemiOnlineConfig",
    "run_demo_noniid",
    "run_heatmap",
    "run_prop1",
    "run_semionline",
]

TAU_MODES = ("random", "fixed-0.5")
MONOTONE_SLACK = 1e-12


def _logspace(lo: float, hi: float, k: int) -> list[float]:
    return [float(v) for v in np.geomspace(lo, hi, k)]


def _grid(lo: float, hi: float, points: int) -> np.ndarray:
    if not lo < hi:
        raise ValueError("grid_lo must be below grid_hi")
    if points < 2:
        raise ValueError("grid_points must be at least 2")
    return np.linspace(lo, hi, points)


def _taus(mode: str, seed: int, k: int) -> np.ndarray:
    if mode == "random":
        return tau_draws(seed, k)
    if mode == "fixed-0.5":
        return np.full(k, 0.5)
    raise ValueError(f"tau_mode must be one of {TAU_MODES}, got {mode!r}")


def _monotone_rows(values: np.ndarray, what: str) -> np.ndarray:
    """Check row-wise monotonicity up to float noise, then remove the noise."""
    drops = np.diff(values, axis=1)
    if drops.size and drops.min() < -MONOTONE_SLACK:
        r, c = np.unravel_index(np.argmin(drops), drops.shape)
        raise ContractViolation(f"{what}: CDF decreases by {-drops[r, c]:.3g} at grid index {c} of row {r}")
    return np.maximum.accumulate(values, axis=1)


def _report(command: str, config: dict, results, warnings: list[str]) -> dict:
    return {"command": command, "config": config, "results": results, "warnings": warnings}


@dataclass(frozen=True)
class HeatmapConfig:
    g_values: Sequence[float] = field(default_factory=lambda: _logspace(0.01, 1.0, 8))
    h_values: Sequence[float] = field(default_factory=lambda: _logspace(0.01, 1.0, 8))
    n_train_proper: int = 2000
    n_calib: int = 1000
    n_test: int = 1000
    seed: int = 0
    grid_lo: float = -5.0
    grid_hi: float = 5.0
    grid_points: int = 1001
    tau_mode: str = "random"
    folds: int | None = None

    def validate(self) -> None:
        if min(self.n_train_proper, self.n_calib, self.n_test) < 1:
            raise ValueError("all counts must be at least 1")
        if not self.g_values or not self.h_values:
            raise ValueError("g_values and h_values must be nonempty")
        if min(self.g_values) <= 0 or min(self.h_values) <= 0:
            raise ValueError("bandwidths must be positive")
        if self.tau_mode not in TAU_MODES:
            raise ValueError(f"tau_mode must be one of {TAU_MODES}")
        if self.folds is not None and (self.folds < 2 or self.folds > self.n_train_proper + self.n_calib):
            raise ValueError("folds must be between 2 and the number of training observations")
        _grid(self.grid_lo, self.grid_hi, self.grid_points)


def _cross_matrix(nw: NadarayaWatson, training: LabeledSequence, folds: FoldSpec, tests: LabeledSequence,
                  grid: np.ndarray, taus: np.ndarray) -> np.ndarray:
    below = np.zeros((len(tests), grid.size))
    equal = np.zeros_like(below)
    for k in range(folds.K):
        in_fold = folds.assignment == k
        proper, calib = training[~in_fold], training[in_fold]
        scores = np.sort(nw(proper, calib.x, calib.y))
        test = _monotone_rows(nw.cdf_matrix(proper, tests.x, grid), repr(nw))
        lo = np.searchsorted(scores, test, side="left")
        below += lo
        equal += np.searchsorted(scores, test, side="right") - lo
    return (below + taus[:, None] * (equal + 1.0)) / (len(training) + 1.0)


def _heatmap_cell(g: float, h: float, proper, calib, tests, grid, taus, folds) -> tuple[dict, int]:
    nw = NadarayaWatson(g, h)
    base = _monotone_rows(nw.cdf_matrix(proper, tests.x, grid), repr(nw))
    crps_base, narrow = crps_batch(grid, base, tests.y)
    scores = np.sort(nw(proper, calib.x, calib.y))
    calibrated = conformal_pvalue(scores, base, taus[:, None])
    crps_cal, narrow_cal = crps_batch(grid, calibrated, tests.y)
    record = {"g": g, "h": h, "crps_base": float(crps_base.mean()), "crps_calibrated": float(crps_cal.mean())}
    if folds is not None:
        training = proper + calib
        cross = _cross_matrix(nw, training, FoldSpec.contiguous(len(training), folds), tests, grid, taus)
        record["crps_cross"] = float(crps_batch(grid, cross, tests.y)[0].mean())
    return record, narrow + narrow_cal


def run_heatmap(config: HeatmapConfig = HeatmapConfig(), jobs: int = 1) -> dict:
    """Mean test CRPS of the Nadaraya-Watson system, raw and split-conformalized,
    over a (g, h) parameter grid."""
    config.validate()
    n_total = config.n_train_proper + config.n_calib + config.n_test
    data = gen_toy(ToyConfig(n_total, config.seed))
    proper = data[: config.n_train_proper]
    calib = data[config.n_train_proper : config.n_train_proper + config.n_calib]
    tests = data[config.n_train_proper + config.n_calib :]
    grid = _grid(config.grid_lo, config.grid_hi, config.grid_points)
    taus = _taus(config.tau_mode, config.seed, config.n_test)

    cells = sorted((float(g), float(h)) for g in config.g_values for h in config.h_values)
    args = [(g, h, proper, calib, tests, grid, taus, config.folds) for g, h in cells]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(lambda a: _heatmap_cell(*a), args))
    else:
        out = [_heatmap_cell(*a) for a in args]
    records = [r for r, _ in out]
    narrow = sum(c for _, c in out)
    improved = sum(r["crps_calibrated"] <= r["crps_base"] for r in records)
    warnings = []
    if narrow:
        warnings.append(f"{narrow} forecast(s) put more than 1e-3 mass outside the evaluation grid")
    cfg = asdict(config)
    cfg["g_values"], cfg["h_values"] = list(map(float, config.g_values)), list(map(float, config.h_values))
    results = {"cells": records, "improvement_fraction": improved / len(records)}
    return _report("heatmap", cfg, results, warnings)


def _replication_seed(seed: int, n: int, r: int) -> int:
    return int(np.random.SeedSequence([seed, n, r]).generate_state(1, dtype=np.uint64)[0])


def run_prop1(
    n_list: Sequence[int] = (10, 100, 1000),
    replications: int = 50,
    seed: int = 0,
    taus: Sequence[float] = (0.0, 0.5, 1.0),
    t_points: int = 1024,
) -> dict:
    """Check the ``1/(n+1)`` gap between the ideal conformal output and ``G_n``,
    and the scale of ``sqrt(n) * KS`` of the PITs."""
    if any(n < 1 for n in n_list) or replications < 1:
        raise ValueError("each n and the replication count must be at least 1")
    oracle = ToyOracle()
    t_grid = np.arange(1, t_points + 1) / (t_points + 1.0)
    k_median = kolmogorov_quantile(0.5)
    results = []
    for n in n_list:
        worst = 0.0
        failures = 0
        scaled = []
        for r in range(replications):
            seq = gen_toy(ToyConfig(n + 1, _replication_seed(seed, n, r)))
            data, x = seq[:n], float(seq.x[n])
            for tau in taus:
                rep = prop1_check(oracle, data, x, tau, t_grid)
                worst = max(worst, rep.sup_discrepancy)
                failures += not rep.within_bound
            scaled.append(rep.scaled_ks)
        median = float(np.median(scaled))
        results.append(
            {
                "n": n,
                "replications": replications,
                "max_sup_discrepancy": worst,
                "bound": 1.0 / (n + 1),
                "bound_failures": failures,
                "pass": failures == 0,
                "median_scaled_ks": median,
                "kolmogorov_median": k_median,
                "median_gap": abs(median - k_median),
            }
        )
    config = {"n_list": list(n_list), "replications": replications, "seed": seed,
              "taus": list(taus), "t_points": t_points}
    return _report("prop1", config, results, [])


@dataclass(frozen=True)
class SemiOnlineConfig:
    n_train: int = 1000
    n_calib: int = 1000
    n_test: int = 1000
    seed: int = 0
    drift: str = "iid-uniform"
    base: str = "nw"
    g: float = 0.1
    h: float = 0.1
    level: float = 0.01

    def validate(self) -> None:
        if self.n_train < 1 or self.n_test < 1 or self.n_calib < 0:
            raise ValueError("n_train and n_test must be at least 1, n_calib nonnegative")
        if self.base not in BASES:
            raise ValueError(f"base must be one of {sorted(BASES)}")
        ToyConfig(0, drift=self.drift)


BASES = {
    "nw": lambda c: NadarayaWatson(c.g, c.h),
    "residual": lambda c: ResidualConformity(c.g),
    "oracle": lambda c: as_predictive_system(ToyOracle()),
    "miscalibrated": lambda c: as_predictive_system(MiscalibratedOracle(square)),
}


def run_semionline(config: SemiOnlineConfig = SemiOnlineConfig(), replications: int = 1) -> dict:
    """Semi-online PITs of a split-conformalized base system and their KS test.

    Replication ``r`` uses seed ``config.seed + r``.
    """
    config.validate()
    base = BASES[config.base](config)
    runs = []
    for r in range(replications):
        seed = config.seed + r
        n_total = config.n_train + config.n_calib + config.n_test
        data = gen_toy(ToyConfig(n_total, seed, drift=config.drift))
        n_fit = config.n_train + config.n_calib
        pits = semi_online_pits(base, data[:n_fit], SplitSpec(config.n_train), data[n_fit:],
                                tau_draws(seed, config.n_test))
        ks = ks_statistic(pits)
        p = kolmogorov_pvalue(ks, len(pits))
        runs.append({"seed": seed, "ks": ks, "p_value": p, "pass": p > config.level,
                     "pits": pits.values.tolist()})
    passed = sum(run["pass"] for run in runs)
    results = {"runs": runs, "passed": passed, "replications": replications}
    return _report("semionline", asdict(config), results, [])


def run_demo_noniid(
    n_calib_list: Sequence[int] = (0, 10, 100, 1000),
    n_test: int = 1000,
    seed: int = 0,
    drift: str = "deterministic-drift",
    tau_mode: str = "random",
    grid_lo: float = -5.0,
    grid_hi: float = 5.0,
    grid_points: int = 1001,
) -> dict:
    """CRPS of the oracle, its ``u**2``-miscalibrated version, and the
    conformalized versions of both, as the calibration sequence grows."""
    if any(n < 0 for n in n_calib_list) or n_test < 1:
        raise ValueError("n_calib values must be nonnegative and n_test positive")
    grid = _grid(grid_lo, grid_hi, grid_points)
    n_max = max(n_calib_list, default=0)
    data = gen_toy(ToyConfig(n_max + n_test, seed, drift=drift))
    tests = data[n_max:]
    taus = _taus(tau_mode, seed, n_test)[:, None]
    oracle = ToyOracle()
    mis = MiscalibratedOracle(square)

    F = oracle(tests.x[:, None], grid[None, :])
    F_mis = mis(tests.x[:, None], grid[None, :])
    crps_oracle = float(crps_batch(grid, F, tests.y)[0].mean())
    crps_mis = float(crps_batch(grid, F_mis, tests.y)[0].mean())
    results = []
    for n in n_calib_list:
        calib = data[n_max - n : n_max]
        conf_mis = conformal_pvalue(np.sort(mis(calib.x, calib.y)), F_mis, taus)
        conf_oracle = conformal_pvalue(np.sort(oracle(calib.x, calib.y)), F, taus)
        c_mis = float(crps_batch(grid, conf_mis, tests.y)[0].mean())
        c_or = float(crps_batch(grid, conf_oracle, tests.y)[0].mean())
        results.append(
            {
                "n_calib": n,
                "crps_oracle": crps_oracle,
                "crps_miscalibrated": crps_mis,
                "crps_conformalized": c_mis,
                "crps_conformalized_oracle": c_or,
                "ratio_conformalized_to_oracle": c_mis / crps_oracle,
                "ratio_miscalibrated_to_oracle": crps_mis / crps_oracle,
            }
        )
    config = {"n_calib_list": list(n_calib_list), "n_test": n_test, "seed": seed, "drift": drift,
              "tau_mode": tau_mode, "grid_lo": grid_lo, "grid_hi": grid_hi, "grid_points": grid_points}
    warnings = []
    if 0 in n_calib_list:
        warnings.append("n_calib=0: conformalized output is the constant tau; no convergence claim")
    return _report("demo-noniid", config, results, warnings)
