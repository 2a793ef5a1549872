import numpy as np
import pytest

from softspace.corpus import ConfigError, DataError
from softspace.scalefit import (FitError, ccdf_points, fit_power_law,
                                ks_distance, log_likelihood)
from softspace.synthkit import sample_discrete_power_law


@pytest.fixture(scope="module")
def synthetic_tail():
    return sample_discrete_power_law(2.0, 5, 20000, seed=7)


class TestFit:
    def test_recovers_generator_alpha_with_known_xmin(self, synthetic_tail):
        fit = fit_power_law(synthetic_tail, x_min=5)
        assert 1.95 <= fit.alpha <= 2.05
        assert fit.n_tail == 20000

    def test_recovers_alpha_and_xmin_by_scan(self, synthetic_tail):
        fit = fit_power_law(synthetic_tail)
        assert 1.95 <= fit.alpha <= 2.05

    def test_local_maximum_of_likelihood(self, synthetic_tail):
        fit = fit_power_law(synthetic_tail, x_min=5)
        ll = log_likelihood(fit, synthetic_tail)
        for eps in (-0.01, 0.01):
            bumped = fit.__class__(fit.alpha + eps, fit.x_min, fit.n_tail, fit.ks_distance)
            assert log_likelihood(bumped, synthetic_tail) <= ll + 1e-9

    def test_duplicating_data_leaves_fit_unchanged(self, synthetic_tail):
        fit1 = fit_power_law(synthetic_tail)
        fit2 = fit_power_law(np.concatenate([synthetic_tail, synthetic_tail]))
        assert fit2.x_min == fit1.x_min
        assert fit2.alpha == pytest.approx(fit1.alpha, abs=1e-9)

    def test_exponential_tail_fits_much_worse(self, synthetic_tail):
        rng = np.random.default_rng(3)
        geometric = rng.geometric(0.1, 20000) + 4
        ks_pl = fit_power_law(synthetic_tail, x_min=5).ks_distance
        ks_geo = fit_power_law(geometric, x_min=5).ks_distance
        assert ks_geo > 10 * ks_pl  # reported contrast, generous margin

    def test_too_few_tail_points(self):
        with pytest.raises(DataError):
            fit_power_law([10], x_min=5)

    def test_degenerate_tail(self):
        with pytest.raises(FitError):
            fit_power_law([7, 7, 7, 7], x_min=5)

    def test_nonpositive_rejected(self):
        with pytest.raises(DataError):
            fit_power_law([0, 3, 5])

    def test_bad_xmin(self):
        with pytest.raises(ConfigError):
            fit_power_law([3, 5, 9], x_min=0)


class TestKs:
    def test_bounds(self, synthetic_tail):
        fit = fit_power_law(synthetic_tail, x_min=5)
        assert 0.0 <= fit.ks_distance <= 1.0

    def test_matches_naive_cdf_difference(self):
        from scipy.special import zeta
        tail = np.array([5, 5, 6, 8, 8, 8, 13, 21])
        alpha = 2.1
        # oracle: direct sup over observed points of |empirical - fitted| CDFs
        z0 = zeta(alpha, 5)
        best = 0.0
        sorted_tail = np.sort(tail)
        for x in np.unique(tail):
            emp = np.searchsorted(sorted_tail, x, side="right") / len(tail)
            emp_lo = np.searchsorted(sorted_tail, x, side="left") / len(tail)
            fitted = 1.0 - zeta(alpha, x + 1) / z0
            fitted_lo = 1.0 - zeta(alpha, x) / z0
            best = max(best, abs(emp - fitted), abs(emp_lo - fitted_lo))
        assert ks_distance(tail, alpha, 5) == pytest.approx(best)


class TestCcdf:
    def test_points_monotone_and_bounded(self, synthetic_tail):
        pts = ccdf_points(synthetic_tail)
        values = [p for _, p in pts]
        assert values == sorted(values, reverse=True)
        assert values[0] == 1.0
        assert all(0 < v <= 1 for v in values)
