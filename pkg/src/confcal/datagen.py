"""Seeded generators for the toy regression problem and its drifting variant.

Labels follow ``y = slope * x + eps`` with ``eps ~ N(0, (|x|/2)^2)``.  In
``iid-uniform`` mode objects are uniform on [-1, 1]; in
``deterministic-drift`` mode ``x_i = sin(i / 50)``, which keeps the
conditional law fixed while the objects are not identically distributed.

Randomness comes from PCG64 substreams spawned from one seed, one substream
per purpose, so extra draws for one purpose never shift another.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LabeledSequence

__all__ = ["DRIFT_MODES", "ToyConfig", "format_csv", "gen_toy", "read_csv", "substreams", "tau_draws", "write_csv"]

DRIFT_MODES = ("iid-uniform", "deterministic-drift")
_STREAMS = ("x", "eps", "tau")


@dataclass(frozen=True)
class ToyConfig:
    n: int
    seed: int = 0
    slope: float = 2.0
    drift: str = "iid-uniform"
    noise_ratio: float = 0.5

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if self.drift not in DRIFT_MODES:
            raise ValueError(f"drift must be one of {DRIFT_MODES}, got {self.drift!r}")


def substreams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(_STREAMS))
    return {name: np.random.Generator(np.random.PCG64(ss)) for name, ss in zip(_STREAMS, children)}


def gen_toy(config: ToyConfig) -> LabeledSequence:
    rng = substreams(config.seed)
    if config.drift == "iid-uniform":
        x = rng["x"].uniform(-1.0, 1.0, size=config.n)
    else:
        x = np.sin(np.arange(1, config.n + 1) / 50.0)
    eps = rng["eps"].standard_normal(config.n) * (config.noise_ratio * np.abs(x))
    return LabeledSequence(x, config.slope * x + eps)


def tau_draws(seed: int, k: int) -> np.ndarray:
    """``k`` uniform randomization numbers from the seed's tau substream."""
    return substreams(seed)["tau"].uniform(0.0, 1.0, size=k)


def format_csv(seq: LabeledSequence) -> str:
    """``x,y`` header and rows with 17 significant digits, LF line endings."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for xi, yi in zip(seq.x.tolist(), seq.y.tolist()):
        w.writerow([format(xi, ".17g"), format(yi, ".17g")])
    return buf.getvalue()


def write_csv(seq: LabeledSequence, path) -> None:
    Path(path).write_text(format_csv(seq), encoding="utf-8", newline="")


def read_csv(path) -> LabeledSequence:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y"]:
            raise ValueError(f"{path}: expected header 'x,y', got {header}")
        rows = [(float(a), float(b)) for a, b in reader]
    return LabeledSequence.from_pairs(rows)
