import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from tvcspec import BadSizeError, DgpSpec, Scenario, simulate_custom, simulate_scenario


class TestScenarios:
    def test_shapes_and_intercept(self):
        for scen in "ABCD":
            s = simulate_scenario(scen, 50, 1)
            assert s.n == 50 and s.p == 2
            assert_array_equal(s.x[:, 0], np.ones(50))

    def test_too_small_rejected(self):
        with pytest.raises(BadSizeError):
            simulate_scenario("A", 19, 0)

    def test_scenario_parse(self):
        assert Scenario.parse("a") is Scenario.A
        assert Scenario.parse(Scenario.D) is Scenario.D
        with pytest.raises(ValueError):
            Scenario.parse("E")

    def test_a_exponential_regressor_mean(self):
        # exponential mean-1 marginal, MC oracle
        n = 100_000
        s = simulate_scenario("A", n, 7)
        assert abs(s.x[:, 1].mean() - 1.0) < 3.0 / np.sqrt(n)

    def test_a_errors_standard_normal_and_exogenous(self):
        n = 100_000
        s = simulate_scenario("A", n, 11)
        assert abs(s.y.mean()) < 3.0 / np.sqrt(n)
        assert abs(s.y.var() - 1.0) < 0.02
        corr = np.corrcoef(s.x[:, 1], s.y)[0, 1]
        assert abs(corr) < 3.0 / np.sqrt(n)

    def test_b_endogeneity_present(self):
        n = 100_000
        s = simulate_scenario("B", n, 3)
        corr = np.corrcoef(s.x[:, 1] ** 2, s.y**2)[0, 1]
        assert corr > 0.0

    def test_c_late_time_variance(self):
        # plug t=1 into the variance formula: exp(-2)/1e4
        n = 100_000
        s = simulate_scenario("C", n, 5)
        late = s.y[int(0.99 * n):]
        target = np.exp(-2.0) / 1e4
        assert abs(late.var() / target - 1.0) < 0.20

    def test_c_early_time_underflow_harmless(self):
        s = simulate_scenario("C", 1000, 5)
        assert np.all(np.isfinite(s.y))
        assert abs(s.y[0]) < 1e-100

    def test_d_ar_moments(self):
        # AR(1) moments oracle: var = 1/(1-0.25) = 4/3, lag-1 autocorr = 0.5
        n = 100_000
        s = simulate_scenario("D", n, 9)
        eps = s.y
        assert abs(eps.var() / (4.0 / 3.0) - 1.0) < 0.05
        lag1 = np.corrcoef(eps[1:], eps[:-1])[0, 1]
        assert abs(lag1 - 0.5) < 0.05

    def test_d_burn_in_start_distribution(self):
        # first observation already has the stationary variance
        draws = np.array(
            [simulate_scenario("D", 20, seed).y[0] for seed in range(4000)]
        )
        assert abs(draws.var() / (4.0 / 3.0) - 1.0) < 0.10

    def test_determinism(self):
        for scen in "ABCD":
            a = simulate_scenario(scen, 100, 42)
            b = simulate_scenario(scen, 100, 42)
            assert_array_equal(a.x, b.x)
            assert_array_equal(a.y, b.y)
            c = simulate_scenario(scen, 100, 43)
            assert not np.array_equal(a.y, c.y)


class TestCustomDgp:
    def test_degenerate_filters_match_iid(self):
        spec = DgpSpec(
            p=1,
            regressor_filter=lambda t, hist: np.array([1.0]),
            volatility=lambda t, hist: 1.0,
            shape=lambda t, hist: hist[-1],
        )
        s = simulate_custom(spec, 200, 5)
        assert_array_equal(s.x, np.ones((200, 1)))
        assert abs(s.y.mean()) < 0.2
        assert abs(s.y.var() - 1.0) < 0.3

    def test_noise_free_truth(self):
        spec = DgpSpec(
            p=2,
            regressor_filter=lambda t, hist: np.array([1.0, hist[-1]]),
            volatility=lambda t, hist: 0.0,
            shape=lambda t, hist: hist[-1],
            beta=lambda t: np.array([t, 0.0]),
        )
        s = simulate_custom(spec, 50, 3)
        assert_allclose(s.y, s.time_grid, atol=1e-14)

    def test_determinism_bitwise(self):
        spec = DgpSpec(
            p=1,
            regressor_filter=lambda t, hist: np.array([hist[-1]]),
            volatility=lambda t, hist: 1.0 + 0.1 * t,
            shape=lambda t, hist: hist[-1],
            burn_in=10,
        )
        a = simulate_custom(spec, 60, 17)
        b = simulate_custom(spec, 60, 17)
        assert_array_equal(a.x, b.x)
        assert_array_equal(a.y, b.y)

    def test_size_guard(self):
        spec = DgpSpec(
            p=1,
            regressor_filter=lambda t, hist: np.array([1.0]),
            volatility=lambda t, hist: 1.0,
            shape=lambda t, hist: hist[-1],
        )
        with pytest.raises(BadSizeError):
            simulate_custom(spec, 10, 0)
