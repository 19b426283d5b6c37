import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from anomalyd.likelihood import (
    AnomalyLikelihood,
    LikelihoodConfig,
    likelihood_from_stats,
    likelihood_series,
    q_function,
    rolling_mean,
    rolling_std,
    threshold_flags,
)
from anomalyd.nn import ErrorSeries


def tail_by_quadrature(x):
    val, _ = integrate.quad(lambda u: math.exp(-u * u / 2) / math.sqrt(2 * math.pi), x, np.inf)
    return val


def brute_force(s, cfg):
    """Stats at every t recomputed from scratch over the raw history."""
    out = []
    for t in range(len(s)):
        long = s[max(0, t - cfg.W + 1): t + 1]
        mu = sum(long) / len(long)
        if len(long) < 2:
            sigma = cfg.sigma_floor
        else:
            sigma = max(math.sqrt(sum((v - mu) ** 2 for v in long) / (len(long) - 1)), cfg.sigma_floor)
        short = s[max(0, t - cfg.W_short + 1): t + 1]
        mu_s = sum(short) / len(short)
        if t < cfg.W_short - 1:
            L = 0.5
        else:
            L = 1.0 - 0.5 * math.erfc(((mu_s - mu) / sigma) / math.sqrt(2))
        out.append((mu, sigma, mu_s, L))
    return np.array(out)


class TestRollingStats:
    def test_mean_constant(self):
        assert rolling_mean([4.2] * 7, 3, 6) == pytest.approx(4.2, abs=1e-15)

    def test_mean_hand(self):
        assert rolling_mean([1, 2, 3, 4], 2, 3) == 3.5

    def test_mean_expanding_base(self):
        assert rolling_mean([0.7, 9.0], 100, 0) == 0.7

    def test_std_constant_is_floored(self):
        assert rolling_std([2.0] * 5, 5, 4, sigma_floor=1e-6) == 1e-6

    def test_std_hand(self):
        # deviations -1, +1 from the mean 2, over n - 1 = 1
        assert rolling_std([1.0, 3.0], 2, 1) == pytest.approx(math.sqrt(2.0), abs=1e-15)

    def test_std_single_point(self):
        assert rolling_std([5.0], 10, 0, sigma_floor=1e-3) == 1e-3


class TestQFunction:
    def test_zero(self):
        assert abs(q_function(0.0) - 0.5) < 1e-12

    def test_against_quadrature(self):
        oracle = tail_by_quadrature(1.2816)
        assert abs(oracle - 0.1) < 1e-3
        assert abs(q_function(1.2816) - oracle) < 1e-10

    @pytest.mark.parametrize("x", [-3.0, -0.5, 0.3, 2.0, 4.5])
    def test_matches_quadrature(self, x):
        assert q_function(x) == pytest.approx(tail_by_quadrature(x), abs=1e-10)

    def test_reflection(self):
        xs = np.random.default_rng(3).normal(0, 3, 100)
        assert np.all(np.abs(q_function(xs) + q_function(-xs) - 1.0) < 1e-12)

    def test_monotone(self):
        xs = np.linspace(-8, 8, 401)
        assert np.all(np.diff(q_function(xs)) < 0)


class TestLikelihoodSeries:
    def test_stationary_is_half(self):
        ls = likelihood_series(np.full(50, 0.3), LikelihoodConfig(W=20, W_short=5))
        np.testing.assert_allclose(ls.likelihood, 0.5, atol=1e-12)
        assert not ls.flags.any()

    def test_step_flags_at_default_threshold(self):
        s = [0.1 + 0.001 * ((-1) ** i) for i in range(600)]
        cfg = LikelihoodConfig()
        sigma0 = rolling_std(s, cfg.W, len(s) - 1)
        s += [s[-1] + 10 * sigma0] * cfg.W_short
        expected = brute_force(s, cfg)[600:, 3]
        ls = likelihood_series(s, cfg)
        np.testing.assert_allclose(ls.likelihood[600:], expected, atol=1e-12)
        assert ls.likelihood[600:].max() > 0.9563
        assert ls.flags[600:].any()
        assert not ls.flags[:600].any()

    def test_default_threshold(self):
        cfg = LikelihoodConfig()
        assert cfg.epsilon == 0.0437
        assert cfg.threshold == pytest.approx(0.9563, abs=1e-15)

    def test_warmup(self):
        cfg = LikelihoodConfig(W=20, W_short=5)
        ls = likelihood_series([0.0, 9.0, 0.0, 9.0, 50.0, 0.0], cfg)
        assert ls.likelihood[:4].tolist() == [0.5] * 4
        assert not ls.flags[:4].any()

    def test_oracle_equivalence(self):
        s = list(np.random.default_rng(5).gamma(2.0, 0.1, 700))
        cfg = LikelihoodConfig(W=100, W_short=7)
        ls = likelihood_series(s, cfg)
        oracle = brute_force(s, cfg)
        got = np.column_stack([ls.mu, ls.sigma, ls.mu_short, ls.likelihood])
        np.testing.assert_allclose(got, oracle, rtol=0, atol=1e-12)

    def test_incremental_matches_batch(self):
        s = np.random.default_rng(8).uniform(0, 1, 120)
        cfg = LikelihoodConfig(W=30, W_short=4)
        ev = AnomalyLikelihood(cfg)
        inc = [ev.update(v)[3] for v in s]
        assert inc == likelihood_series(s, cfg).likelihood.tolist()

    def test_error_series_input(self):
        es = ErrorSeries(np.array([10, 20, 30]), np.array([0.1, 0.2, 0.3]))
        ls = likelihood_series(es, LikelihoodConfig(W=3, W_short=2))
        assert ls.timestamps.tolist() == [10, 20, 30]

    def test_empty(self):
        with pytest.raises(ValueError):
            likelihood_series([])

    def test_open_interval_under_extremes(self):
        s = [0.0] * 50 + [1e9] * 10 + [0.0] * 30
        ls = likelihood_series(s, LikelihoodConfig(W=40, W_short=5, sigma_floor=1e-12))
        assert np.all((ls.likelihood > 0) & (ls.likelihood < 1))

    def test_sigma_at_or_above_floor(self):
        ls = likelihood_series(np.r_[np.zeros(30), np.ones(30)], LikelihoodConfig(W=20, W_short=3, sigma_floor=1e-4))
        assert np.all(ls.sigma >= 1e-4)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 5.0), min_size=12, max_size=80), st.floats(0.01, 100.0))
    def test_scale_invariance(self, s, c):
        cfg = LikelihoodConfig(W=30, W_short=4, sigma_floor=1e-300)
        a = likelihood_series(s, cfg)
        b = likelihood_series([c * v for v in s], cfg)
        live = a.sigma > 1e-6
        np.testing.assert_allclose(a.likelihood[live], b.likelihood[live], rtol=0, atol=1e-9)
        clear = live & (np.abs(a.likelihood - cfg.threshold) > 1e-9)
        assert np.array_equal(a.flags[clear], b.flags[clear])

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-5, 5), st.floats(0.01, 10))
    def test_monotone_in_short_mean(self, mu, sigma):
        grid = [likelihood_from_stats(mu, sigma, mu + d * sigma) for d in np.linspace(-6, 6, 50)]
        assert all(b > a for a, b in zip(grid, grid[1:]))


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(W=10, W_short=10), dict(epsilon=0.0), dict(epsilon=1.0), dict(sigma_floor=0.0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            LikelihoodConfig(**kwargs)


class TestThresholdFlags:
    def test_neutral(self):
        assert not threshold_flags([0.5], 0.0437)[0]

    def test_above(self):
        assert 0.96 >= 1 - 0.0437
        assert threshold_flags([0.96], 0.0437)[0]

    def test_epsilon_near_one_flags_all(self):
        assert threshold_flags([1e-9, 0.2, 0.5, 0.999], 1 - 1e-12).all()
