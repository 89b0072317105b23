import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import expit

from confcal import (
    ContractViolation,
    DistributionEvaluation,
    LabeledSequence,
    NadarayaWatson,
    Observation,
    TauInterval,
    bisect_monotone,
    eval_on_grid,
)
from confcal.base import ResidualConformity, ToyOracle, MiscalibratedOracle, as_predictive_system, dempster_hill_conformity
from confcal.datagen import ToyConfig, gen_toy

from conftest import seq


class TestBisect:
    def test_sigmoid_midpoint(self):
        assert bisect_monotone(expit, 0.5, -10, 10, "last-below", 1e-9) == pytest.approx(0.0, abs=1e-9)

    def test_constant_returns_lo(self):
        assert bisect_monotone(lambda y: 0.3, 0.3, 0.0, 1.0, "last-below") == 0.0

    def test_constant_first_above_returns_hi(self):
        assert bisect_monotone(lambda y: 0.3, 0.3, 0.0, 1.0, "first-above") == 1.0

    def test_identity_first_above(self):
        tol = 1e-9
        got = bisect_monotone(lambda y: y, 0.25, 0.0, 1.0, "first-above", tol)
        # scan oracle at step 1e-6: first grid point strictly above the target
        scan = np.arange(0.0, 1.0 + 1e-6, 1e-6)
        first = scan[np.argmax(scan > 0.25)]
        assert abs(got - 0.25) <= tol
        assert abs(got - first) <= 1e-6 + tol

    def test_plateau_edges(self):
        f = lambda y: float(np.clip(y, 0.0, 1.0) * 0.5 + np.clip(y - 2.0, 0.0, 1.0) * 0.5)  # flat 0.5 on [1, 2]
        assert bisect_monotone(f, 0.5, -1, 4, "last-below") == pytest.approx(1.0, abs=1e-9)
        assert bisect_monotone(f, 0.5, -1, 4, "first-above") == pytest.approx(2.0, abs=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            bisect_monotone(expit, 0.5, -1, 1, tol=0)
        with pytest.raises(ArithmeticError):
            bisect_monotone(expit, 0.99, -1, 1)
        with pytest.raises(ValueError):
            bisect_monotone(expit, 0.5, -1, 1, mode="sideways")

    def test_huge_bracket_stops_at_float_resolution(self):
        y = bisect_monotone(lambda v: v, 1e15, 0.0, 1e16, "last-below", tol=1e-9)
        assert y == pytest.approx(1e15, rel=1e-15)

    @given(st.floats(-5, 5), st.floats(0.1, 10))
    def test_inverts_scaled_sigmoid(self, loc, scale):
        p = 0.3
        y = bisect_monotone(lambda v: expit((v - loc) / scale), p, loc - 100, loc + 100, "last-below")
        assert y == pytest.approx(loc + scale * np.log(p / (1 - p)), abs=1e-8)


class TestTypes:
    def test_observation_finite(self):
        with pytest.raises(ValueError):
            Observation(np.nan, 0.0)

    def test_sequence_roundtrip(self):
        s = seq((0, 1), (2, 3), (4, 5))
        assert len(s) == 3
        assert s[1] == Observation(2.0, 3.0)
        assert list(s[1:]) == [Observation(2, 3), Observation(4, 5)]
        proper, calib = s.split(1)
        assert len(proper) == 1 and len(calib) == 2
        assert proper + calib == s

    def test_sequence_immutable(self):
        s = seq((0, 1))
        with pytest.raises(ValueError):
            s.x[0] = 3.0

    def test_tau_interval(self):
        iv = TauInterval(0.2, 0.6)
        assert iv.at(0.5) == pytest.approx(0.4)
        with pytest.raises(ValueError):
            TauInterval(0.6, 0.2)

    def test_distribution_evaluation_rejects_decrease(self):
        with pytest.raises(ContractViolation, match="F\\(1.0\\)"):
            DistributionEvaluation([0.0, 1.0, 2.0], [0.1, 0.5, 0.4])


class TestEvalOnGrid:
    def test_constant_half(self):
        d = eval_on_grid(lambda t, x, y: 0.5, seq(), 0.0, [-1.0, 0.0, 3.0])
        assert np.all(d.values == 0.5)

    def test_sigmoid(self):
        d = eval_on_grid(dempster_hill_conformity, seq(), 0.0, [-1000.0, 0.0, 1000.0])
        assert d.values == pytest.approx([0.0, 0.5, 1.0], abs=1e-12)

    def test_nw_single_point(self):
        d = eval_on_grid(NadarayaWatson(0.3, 0.7), seq((0, 0)), 0.0, [0.0])
        assert d.values[0] == 0.5

    def test_violation_names_pair(self):
        bad = lambda t, x, y: np.where(np.asarray(y) > 0.5, 0.2, 0.4)
        with pytest.raises(ContractViolation, match="F\\(0.0\\)=0.4"):
            eval_on_grid(bad, seq(), 0.0, [-1.0, 0.0, 1.0])

    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            eval_on_grid(dempster_hill_conformity, seq(), 0.0, [0.0, 0.0])

    def test_deterministic(self):
        data = gen_toy(ToyConfig(50, seed=3))
        grid = np.linspace(-3, 3, 101)
        a = eval_on_grid(NadarayaWatson(0.2, 0.1), data, 0.3, grid)
        b = eval_on_grid(NadarayaWatson(0.2, 0.1), data, 0.3, grid)
        assert a.values.tobytes() == b.values.tobytes()


def _systems():
    """Shipped systems with the label scale their tails decay on."""
    return [
        ("nw", lambda g, h: NadarayaWatson(g, h), lambda data, x, g, h: h),
        ("residual", lambda g, h: ResidualConformity(g), None),
        ("oracle", lambda g, h: as_predictive_system(ToyOracle()), lambda data, x, g, h: ToyOracle().params.scale(x)),
        ("miscalibrated", lambda g, h: as_predictive_system(MiscalibratedOracle()),
         lambda data, x, g, h: ToyOracle().params.scale(x)),
        ("dempster-hill", lambda g, h: dempster_hill_conformity, lambda data, x, g, h: 1.0),
    ]


@pytest.mark.parametrize("name,make,scale", _systems(), ids=[s[0] for s in _systems()])
def test_shipped_systems_obey_axioms(name, make, scale, rng):
    """1,000 random (training, x) draws: monotone on a 512-point grid with
    small mass beyond the label range widened by ten noise scales."""
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        data = LabeledSequence(rng.uniform(-1, 1, n), rng.normal(0, 1.5, n))
        x = float(rng.uniform(-1.2, 1.2))
        g, h = float(rng.uniform(0.05, 1.0)), float(rng.uniform(0.05, 1.0))
        ps = make(g, h)
        if scale is None:
            from confcal.base import _in_sample_abs_residuals, nw_weights

            w = nw_weights(data.x, x, g)
            s = max(float(w @ _in_sample_abs_residuals(data, g)), ps.params.sigma_floor)
            centre = float(w @ data.y)
            lo, hi = min(data.y.min(), centre) - 10 * s, max(data.y.max(), centre) + 10 * s
        else:
            s = float(scale(data, x, g, h))
            centre = 2.0 * x
            lo, hi = min(data.y.min(), centre) - 10 * s, max(data.y.max(), centre) + 10 * s
        d = eval_on_grid(ps, data, x, np.linspace(lo, hi, 512))
        assert d.values[0] < 0.05 and d.values[-1] > 0.95, name
