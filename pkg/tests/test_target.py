import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pawl_tempering.target import (
    GaussianMixture,
    TemperedDensity,
    log_density,
    log_partition_quadrature,
    paper_mixture,
    standard_normal,
    tempered_log_density,
)

# 40-digit mpmath values of log(0.5 phi(x + 15) + 0.5 phi(x - 15))
LOG_PI_15 = -1.6120857137646181
LOG_PI_0 = -113.41893853320467
LOG_PI_14 = -2.1120857137646181


def _mp_log_pi(x):
    mp.mp.dps = 40
    phi = lambda v, m: mp.exp(-((v - m) ** 2) / 2) / mp.sqrt(2 * mp.pi)
    return float(mp.log(phi(x, -15) / 2 + phi(x, 15) / 2))


def _single_gaussian_log_z(T):
    # int exp(-x^2 / 2T) (2 pi)^(-1/2T) dx
    return 0.5 * math.log(2 * math.pi * T) - math.log(2 * math.pi) / (2 * T)


class TestMixtureLogDensity:
    def test_at_mode(self):
        assert log_density(paper_mixture(), 15.0) == pytest.approx(LOG_PI_15, abs=1e-12)

    def test_symmetric_mode(self):
        m = paper_mixture()
        assert log_density(m, -15.0) == log_density(m, 15.0)

    def test_valley_does_not_underflow(self):
        v = log_density(paper_mixture(), 0.0)
        assert math.isfinite(v)
        assert v == pytest.approx(LOG_PI_0, abs=1e-9)

    @pytest.mark.parametrize("x", [-200.0, -37.5, -15.0, -1.0, 0.0, 3.3, 14.0, 60.0, 200.0])
    def test_matches_high_precision_oracle(self, x):
        assert log_density(paper_mixture(), x) == pytest.approx(_mp_log_pi(x), rel=1e-13, abs=1e-12)

    def test_frozen_constants_match_oracle(self):
        assert _mp_log_pi(15) == pytest.approx(LOG_PI_15, abs=1e-15)
        assert _mp_log_pi(0) == pytest.approx(LOG_PI_0, abs=1e-12)
        assert _mp_log_pi(14) == pytest.approx(LOG_PI_14, abs=1e-15)

    def test_vectorised_matches_scalar(self):
        xs = np.linspace(-40, 40, 17)
        m = paper_mixture()
        np.testing.assert_array_equal(m.log_density(xs), [m.log_density(x) for x in xs])

    def test_many_components_use_logsumexp(self):
        m = GaussianMixture((0.2, 0.3, 0.5), (-5.0, 0.0, 5.0), (1.0, 2.0, 0.5))
        x = 1.3
        expect = math.log(
            sum(
                w * math.exp(-0.5 * ((x - mu) / s) ** 2) / (s * math.sqrt(2 * math.pi))
                for w, mu, s in zip(m.weights, m.means, m.sds)
            )
        )
        assert m.log_density(x) == pytest.approx(expect, rel=1e-13)

    @given(st.floats(-300, 300, allow_nan=False))
    def test_symmetry_exact(self, x):
        m = paper_mixture()
        assert m.log_density(x) == m.log_density(-x)

    @given(st.floats(-1e3, 1e3, allow_nan=False))
    def test_finite(self, x):
        assert math.isfinite(paper_mixture().log_density(x))

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(weights=(0.5, 0.6), means=(0, 1), sds=(1, 1)),
            dict(weights=(0.5, 0.5), means=(0, 1), sds=(1, 0)),
            dict(weights=(1.0,), means=(0, 1), sds=(1,)),
            dict(weights=(), means=(), sds=()),
        ],
    )
    def test_invalid_mixture_rejected(self, kwargs):
        with pytest.raises(ValueError):
            GaussianMixture(**kwargs)


class TestTempered:
    def test_unit_temperature_is_identity(self):
        m = paper_mixture()
        for x in (-20.0, 0.0, 7.0):
            assert tempered_log_density(TemperedDensity(m, 1.0), x) == m.log_density(x)

    def test_t10_values(self):
        t = TemperedDensity(paper_mixture(), 10.0)
        assert tempered_log_density(t, 15.0) == pytest.approx(LOG_PI_15 / 10, abs=1e-12)
        assert tempered_log_density(t, 0.0) == pytest.approx(LOG_PI_0 / 10, abs=1e-12)

    def test_temperature_below_one_rejected(self):
        with pytest.raises(ValueError):
            TemperedDensity(paper_mixture(), 0.5)

    @given(st.floats(-100, 100, allow_nan=False), st.floats(1, 50), st.floats(1, 50))
    def test_monotone_toward_zero(self, x, t1, t2):
        m = paper_mixture()
        lo, hi = sorted((t1, t2))
        a = tempered_log_density(TemperedDensity(m, lo), x)
        b = tempered_log_density(TemperedDensity(m, hi), x)
        assert a < 0
        assert a <= b <= 0


class TestQuadrature:
    def test_normalised_mixture(self):
        z = log_partition_quadrature(TemperedDensity(paper_mixture(), 1.0), -60, 60, 100_001)
        assert z == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("T", [1.0, 2.0, 5.0, 10.0])
    def test_single_gaussian_closed_form(self, T):
        z = log_partition_quadrature(TemperedDensity(standard_normal(), T), -60, 60, 100_000)
        assert math.exp(z) == pytest.approx(math.exp(_single_gaussian_log_z(T)), rel=1e-5)

    def test_single_gaussian_t2_value(self):
        z = log_partition_quadrature(TemperedDensity(standard_normal(), 2.0))
        assert z == pytest.approx(0.80604285688230903, abs=1e-6)

    def test_mixture_t2_value(self):
        # disjoint components: log(2 * 0.5**0.5) + single-Gaussian value
        expect = math.log(2 * 0.5**0.5) + _single_gaussian_log_z(2.0)
        assert expect == pytest.approx(1.1526164471622817, abs=1e-12)
        z = log_partition_quadrature(TemperedDensity(paper_mixture(), 2.0))
        assert z == pytest.approx(expect, abs=1e-6)

    def test_rejects_bad_interval(self):
        t = TemperedDensity(paper_mixture(), 1.0)
        with pytest.raises(ValueError):
            log_partition_quadrature(t, 5.0, 5.0)
        with pytest.raises(ValueError):
            log_partition_quadrature(t, -60, 60, n_points=999)
