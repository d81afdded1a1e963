import numpy as np
import pytest

from servoest.metrics import (EnsembleStats, IntervalSpec, ensemble_stats,
                              interval_nrmse, nrmse)
from servoest.signals import TimeSeries


def series(values, dt=1.0, t0=0.0):
    return TimeSeries(t0, dt, np.asarray(values, dtype=float))


class TestNrmse:
    def test_perfect_estimate_is_zero(self):
        truth = series([1.0, -2.0, 3.0])
        assert nrmse(series([1.0, -2.0, 3.0]), truth) == 0.0

    def test_zero_estimate_is_hundred(self):
        truth = series([1.0, -2.0, 3.0])
        assert nrmse(series([0.0, 0.0, 0.0]), truth) == pytest.approx(100.0)

    def test_uniform_ten_percent_error(self):
        truth = series([1.0, 2.0, -4.0])
        est = series([1.1, 2.2, -4.4])
        assert nrmse(est, truth) == pytest.approx(10.0, rel=1e-12)

    def test_scale_invariance(self):
        truth = series([0.5, -1.5, 2.5, 0.25])
        est = series([0.6, -1.2, 2.0, 0.5])
        a = nrmse(est, truth)
        b = nrmse(series(7.0 * est.values), series(7.0 * truth.values))
        assert a == pytest.approx(b, rel=1e-12)

    def test_recombination_of_squared_errors(self):
        # whole-record NRMSE^2 * sum(x^2) equals the sum of the per-interval
        # NRMSE^2 * per-interval signal energies
        rng = np.random.default_rng(4)
        truth = series(rng.normal(size=30), dt=0.1)
        est = series(truth.values + 0.05 * rng.normal(size=30), dt=0.1)
        spec = IntervalSpec(boundaries=(0.0, 1.0, 2.0, 3.0))
        parts = interval_nrmse(est, truth, spec)
        t = truth.times
        total = 0.0
        for (a, b), v in zip(spec.intervals, parts):
            mask = (t >= a) & (t < b)
            total += (v / 100.0) ** 2 * np.sum(truth.values[mask] ** 2)
        whole = (nrmse(est, truth) / 100.0) ** 2 * np.sum(truth.values ** 2)
        assert total == pytest.approx(whole, rel=1e-12)

    def test_rejects_zero_energy_truth(self):
        with pytest.raises(ValueError):
            nrmse(series([1.0, 2.0]), series([0.0, 0.0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            nrmse(series([1.0]), series([1.0, 2.0]))


class TestIntervalNrmse:
    def test_error_is_localized(self):
        # corrupt only the middle third; other intervals stay exact
        n = 30
        truth = series(np.ones(n), dt=0.1)
        v = np.ones(n)
        t = truth.times
        v[(t >= 1.0) & (t < 2.0)] = 1.05
        parts = interval_nrmse(series(v, dt=0.1), truth,
                               IntervalSpec(boundaries=(0.0, 1.0, 2.0, 3.0)))
        assert parts[0] == 0.0
        assert parts[1] == pytest.approx(5.0, rel=1e-12)
        assert parts[2] == 0.0

    def test_half_open_boundary_sample(self):
        # the sample at t = 1.0 belongs to the second interval only
        truth = series(np.ones(21), dt=0.1)
        v = np.ones(21)
        v[10] = 2.0  # t = 1.0 exactly
        parts = interval_nrmse(series(v, dt=0.1), truth,
                               IntervalSpec(boundaries=(0.0, 1.0, 2.0)))
        assert parts[0] == 0.0
        assert parts[1] > 0.0

    def test_default_spec_thirds(self):
        spec = IntervalSpec()
        assert spec.intervals == [(0.0, 10.0), (10.0, 20.0), (20.0, 30.0)]

    def test_rejects_uncovered_boundaries(self):
        truth = series(np.ones(5), dt=0.1)
        with pytest.raises(ValueError):
            interval_nrmse(truth, truth, IntervalSpec(boundaries=(0.0, 5.0)))

    def test_rejects_non_increasing_boundaries(self):
        with pytest.raises(ValueError):
            IntervalSpec(boundaries=(0.0, 1.0, 1.0))


class TestEnsembleStats:
    def test_two_values(self):
        s = ensemble_stats([1.0, 3.0])
        assert s == EnsembleStats(mean=2.0, std=np.sqrt(2.0), n=2)

    def test_single_value_std_zero(self):
        s = ensemble_stats([4.2])
        assert s.std == 0.0 and s.n == 1

    def test_sample_std_uses_n_minus_one(self):
        v = [1.0, 2.0, 3.0, 4.0]
        s = ensemble_stats(v)
        assert s.std == pytest.approx(np.std(v, ddof=1), rel=1e-15)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ensemble_stats([])
