"""Conformal calibration of predictive systems."""

from .base import (
    MiscalibratedOracle,
    NadarayaWatson,
    NwParams,
    OracleParams,
    ResidualConformity,
    ResidualParams,
    ToyOracle,
    as_predictive_system,
    dempster_hill_conformity,
    miscalibrated_cdf,
    nw_evaluate,
    oracle_cdf,
    residual_conformity,
)
from .calibrators import (
    FoldSpec,
    SplitConformalSystem,
    SplitSpec,
    StepDistribution,
    ccps_evaluate,
    icps_evaluate,
    scps_exact,
    scps_grid,
    scps_pvalue,
    step_distribution_evaluate,
    step_tau_interval,
)
from .core import (
    ContractViolation,
    DistributionEvaluation,
    LabeledSequence,
    Observation,
    TauInterval,
    bisect_monotone,
    eval_on_grid,
)
from .datagen import ToyConfig, gen_toy
from .evaluation import (
    ConvergenceReport,
    PitSample,
    crps,
    kolmogorov_cdf,
    ks_statistic,
    pit,
    prop1_check,
    semi_online_pits,
)

__version__ = "0.1.0"

__all__ = [
    "ContractViolation",
    "ConvergenceReport",
    "DistributionEvaluation",
    "FoldSpec",
    "LabeledSequence",
    "MiscalibratedOracle",
    "NadarayaWatson",
    "NwParams",
    "Observation",
    "OracleParams",
    "PitSample",
    "ResidualConformity",
    "ResidualParams",
    "SplitConformalSystem",
    "SplitSpec",
    "StepDistribution",
    "TauInterval",
    "ToyConfig",
    "ToyOracle",
    "as_predictive_system",
    "bisect_monotone",
    "ccps_evaluate",
    "crps",
    "dempster_hill_conformity",
    "eval_on_grid",
    "gen_toy",
    "icps_evaluate",
    "kolmogorov_cdf",
    "ks_statistic",
    "miscalibrated_cdf",
    "nw_evaluate",
    "oracle_cdf",
    "pit",
    "prop1_check",
    "residual_conformity",
    "scps_exact",
    "scps_grid",
    "scps_pvalue",
    "semi_online_pits",
    "step_distribution_evaluate",
    "step_tau_interval",
]
