import numpy as np
import pytest
from numpy.testing import assert_allclose

from tvcspec import (
    AllSingularError,
    NullSpec,
    SingularDesignError,
    TimeSeriesSample,
    design_moment,
    gcv_bandwidth,
    gcv_test_bandwidth,
    get_kernel,
    local_linear_fit,
    response_moment,
    rss_null,
)
from tvcspec.loclin import block_design_matrices, fit_rss_batch


def brute_design_moment(sample, kernel, b, t, l):
    out = np.zeros((sample.p, sample.p))
    for i in range(sample.n):
        u = ((i + 1) / sample.n - t) / b
        out += np.outer(sample.x[i], sample.x[i]) * u**l * kernel(u)
    return out / (sample.n * b)


def brute_response_moment(sample, kernel, b, t, l):
    out = np.zeros(sample.p)
    for i in range(sample.n):
        u = ((i + 1) / sample.n - t) / b
        out += sample.x[i] * sample.y[i] * u**l * kernel(u)
    return out / (sample.n * b)


def random_sample(n, p, seed, noise=1.0):
    rng = np.random.default_rng(seed)
    x = np.column_stack([np.ones(n)] + [rng.normal(size=n) for _ in range(p - 1)])
    y = rng.normal(scale=max(noise, 1e-12), size=n) if noise else np.zeros(n)
    return TimeSeriesSample(x, y)


class TestMoments:
    def test_hand_computed_sum(self):
        # n=3 one-regressor design, uniform kernel, all three weights are 1/2
        s = TimeSeriesSample(np.ones((3, 1)), np.zeros(3))
        val = design_moment(s, get_kernel("uniform"), 1.0, 2.0 / 3.0, 0)
        assert_allclose(val, [[0.5]], atol=1e-15)

    def test_first_moment_cancellation(self):
        s = TimeSeriesSample(np.ones((3, 1)), np.zeros(3))
        k = get_kernel("uniform")
        val = design_moment(s, k, 1.0, 2.0 / 3.0, 1)
        assert abs(val[0, 0]) <= 2.0 / (3 * 1.0)
        assert_allclose(val, brute_design_moment(s, k, 1.0, 2.0 / 3.0, 1), atol=1e-15)

    def test_empty_window_is_zero(self):
        s = random_sample(50, 2, 0)
        val = design_moment(s, get_kernel("epanechnikov"), 0.05, -0.5, 0)
        assert_allclose(val, np.zeros((2, 2)))

    def test_zero_response(self):
        s = TimeSeriesSample(np.ones((20, 1)), np.zeros(20))
        val = response_moment(s, get_kernel("uniform"), 0.3, 0.5, 0)
        assert_allclose(val, np.zeros(1))

    def test_linear_response_identity(self):
        # y = x'c so R_l(t) = S_l(t) c for every l and t
        rng = np.random.default_rng(1)
        x = np.column_stack([np.ones(30), rng.normal(size=30)])
        c = np.array([1.5, -2.0])
        s = TimeSeriesSample(x, x @ c)
        k = get_kernel("epanechnikov")
        for l in range(3):
            for t in [0.1, 0.5, 0.93]:
                assert_allclose(
                    response_moment(s, k, 0.25, t, l),
                    design_moment(s, k, 0.25, t, l) @ c,
                    atol=1e-13,
                )

    @pytest.mark.parametrize("kernel_name", ["uniform", "epanechnikov", "triangular"])
    @pytest.mark.parametrize("l", [0, 1, 2, 3])
    def test_brute_force_agreement(self, kernel_name, l):
        rng = np.random.default_rng(7 + l)
        n = 47
        x = np.column_stack([np.ones(n), rng.normal(size=n)])
        s = TimeSeriesSample(x, rng.normal(size=n))
        k = get_kernel(kernel_name)
        for t in [0.04, 0.37, 0.81, 1.0]:
            assert_allclose(
                design_moment(s, k, 0.21, t, l),
                brute_design_moment(s, k, 0.21, t, l),
                atol=1e-12,
            )
            assert_allclose(
                response_moment(s, k, 0.21, t, l),
                brute_response_moment(s, k, 0.21, t, l),
                atol=1e-12,
            )

    def test_grid_matrices_match_pointwise(self):
        # the FFT path must agree with the direct double loop
        s = random_sample(40, 2, 3)
        k = get_kernel("epanechnikov")
        b = 0.3
        mats = block_design_matrices(s, k, b)
        for i in [0, 13, 39]:
            t = (i + 1) / 40
            s0 = brute_design_moment(s, k, b, t, 0)
            s1 = brute_design_moment(s, k, b, t, 1)
            s2 = brute_design_moment(s, k, b, t, 2)
            expected = np.block([[s0, s1.T], [s1, s2]])
            assert_allclose(mats[i], expected, atol=1e-12)


class TestLocalLinearFit:
    def test_affine_truth_reproduced(self):
        # local linear reproduces affine coefficient curves exactly
        rng = np.random.default_rng(5)
        for trial in range(20):
            n = int(rng.integers(30, 80))
            p = int(rng.integers(1, 4))
            x = np.column_stack([np.ones(n)] + [rng.normal(size=n) for _ in range(p - 1)])
            t = np.arange(1, n + 1) / n
            a = rng.normal(size=p)
            c = rng.normal(size=p)
            beta = a[None, :] + c[None, :] * t[:, None]
            y = np.einsum("ij,ij->i", x, beta)
            s = TimeSeriesSample(x, y)
            b = float(rng.uniform(0.15, 0.6))
            fit = local_linear_fit(s, get_kernel("epanechnikov"), b)
            assert fit.rss <= 1e-12 * (y @ y)
            assert_allclose(fit.beta, beta, atol=1e-8)
            assert_allclose(fit.beta_deriv, np.broadcast_to(c, (n, p)), atol=1e-6)

    def test_constant_response(self):
        s = TimeSeriesSample(np.ones((25, 1)), np.full(25, 5.0))
        fit = local_linear_fit(s, get_kernel("uniform"), 0.3)
        assert_allclose(fit.beta[:, 0], np.full(25, 5.0), atol=1e-10)
        assert_allclose(fit.beta_deriv[:, 0], np.zeros(25), atol=1e-8)

    def test_matches_weighted_least_squares(self):
        # WLS oracle at a single evaluation point
        s = random_sample(60, 2, 11)
        k = get_kernel("epanechnikov")
        b = 0.25
        fit = local_linear_fit(s, k, b)
        i = 29
        t0 = (i + 1) / 60
        u = (s.time_grid - t0) / b
        w = k(u)
        design = np.hstack([s.x, s.x * (s.time_grid - t0)[:, None]])
        sw = np.sqrt(w)
        eta, *_ = np.linalg.lstsq(design * sw[:, None], s.y * sw, rcond=None)
        assert_allclose(fit.beta[i], eta[:2], atol=1e-10)
        assert_allclose(fit.beta_deriv[i], eta[2:], atol=1e-10)

    def test_block_system_consistency(self):
        # solving the block system reproduces the response moments
        s = random_sample(50, 2, 13)
        k = get_kernel("epanechnikov")
        b = 0.3
        fit = local_linear_fit(s, k, b)
        mats = block_design_matrices(s, k, b)
        eta = np.concatenate([fit.beta, fit.beta_deriv * b], axis=1)
        for i in [0, 7, 25, 49]:
            t = (i + 1) / 50
            rhs = np.concatenate([
                brute_response_moment(s, k, b, t, 0),
                brute_response_moment(s, k, b, t, 1),
            ])
            lhs = mats[i] @ eta[i]
            assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-12)

    def test_residual_bookkeeping(self):
        s = random_sample(40, 2, 17)
        fit = local_linear_fit(s, get_kernel("uniform"), 0.35)
        assert np.array_equal(fit.fitted + fit.residuals, s.y)
        assert_allclose(fit.rss, float(fit.residuals @ fit.residuals), rtol=1e-10)
        assert fit.rss >= 0.0

    def test_singular_design_raises(self):
        # duplicated regressor column makes every local system singular
        rng = np.random.default_rng(19)
        z = rng.normal(size=40)
        x = np.column_stack([z, z])
        s = TimeSeriesSample(x, rng.normal(size=40))
        with pytest.raises(SingularDesignError):
            local_linear_fit(s, get_kernel("epanechnikov"), 0.3)

    def test_batch_rss_matches_single(self):
        s = random_sample(45, 2, 23)
        k = get_kernel("epanechnikov")
        rng = np.random.default_rng(29)
        ys = rng.normal(size=(45, 4))
        rss = fit_rss_batch(s, ys, k, 0.3)
        for j in range(4):
            fit = local_linear_fit(s.with_response(ys[:, j]), k, 0.3)
            assert_allclose(rss[j], fit.rss, rtol=1e-10)


class TestRssNull:
    def test_simple_null_exact_truth(self):
        rng = np.random.default_rng(31)
        x = np.column_stack([np.ones(40), rng.normal(size=40)])
        t = np.arange(1, 41) / 40
        beta = np.column_stack([np.sin(t), np.cos(t)])
        y = np.einsum("ij,ij->i", x, beta)
        s = TimeSeriesSample(x, y)
        null = NullSpec.simple(lambda tt: np.array([np.sin(tt), np.cos(tt)]))
        assert rss_null(s, null, get_kernel("uniform"), 0.2) < 1e-20

    def test_zero_null_is_sum_of_squares(self):
        s = random_sample(30, 2, 37)
        val = rss_null(s, NullSpec.zero(), get_kernel("uniform"), 0.2)
        assert_allclose(val, float(s.y @ s.y), rtol=1e-15)

    def test_component_null_brute_force(self):
        # two-step oracle with p1 = p - 1
        rng = np.random.default_rng(41)
        n, p = 40, 3
        x = np.column_stack([np.ones(n), rng.normal(size=n), rng.normal(size=n)])
        s = TimeSeriesSample(x, rng.normal(size=n))
        k = get_kernel("epanechnikov")
        b = 0.3
        beta0 = lambda t: np.array([0.1, -0.2])
        null = NullSpec.component(p1=2, beta0_first=beta0)
        got = rss_null(s, null, k, b)

        ystar = s.y - s.x[:, :2] @ np.array([0.1, -0.2])
        sub = TimeSeriesSample(s.x[:, 2:], ystar)
        expected = local_linear_fit(sub, k, b).rss
        assert_allclose(got, expected, rtol=1e-10)

    def test_component_degenerate_p1_equals_p(self):
        s = random_sample(30, 2, 43)
        null = NullSpec.component(p1=2)
        got = rss_null(s, null, get_kernel("uniform"), 0.25)
        assert_allclose(got, float(s.y @ s.y), rtol=1e-14)

    def test_parametric_rejected(self):
        from tvcspec import constant_family

        s = random_sample(30, 1, 47)
        with pytest.raises(ValueError):
            rss_null(s, NullSpec.parametric(constant_family()), get_kernel("uniform"), 0.2)


class TestGcv:
    def test_single_candidate(self):
        s = random_sample(40, 2, 53)
        assert gcv_bandwidth(s, get_kernel("epanechnikov"), [0.3]) == 0.3

    def test_noise_free_affine_picks_largest(self):
        # zero RSS everywhere; tie broken to the largest bandwidth
        n = 50
        x = np.column_stack([np.ones(n), np.linspace(-1, 1, n)])
        t = np.arange(1, n + 1) / n
        y = (1 + 2 * t) + x[:, 1] * (0.5 - t)
        s = TimeSeriesSample(x, y)
        got = gcv_bandwidth(s, get_kernel("epanechnikov"), [0.2, 0.3, 0.4])
        assert got == 0.4

    def test_matches_exhaustive_scores(self):
        # brute-force score oracle over the candidate grid
        rng = np.random.default_rng(59)
        n = 400
        t = np.arange(1, n + 1) / n
        x = np.column_stack([np.ones(n), rng.normal(size=n)])
        beta = np.column_stack([np.sin(2 * np.pi * t), np.cos(2 * np.pi * t)])
        y = np.einsum("ij,ij->i", x, beta) + 0.5 * rng.normal(size=n)
        s = TimeSeriesSample(x, y)
        k = get_kernel("epanechnikov")
        candidates = np.geomspace(0.05, 0.5, 8)

        def score(b):
            fit = local_linear_fit(s, k, b)
            from tvcspec.loclin import block_design_inverses

            inv, _ = block_design_inverses(s, k, b)
            hat = float(k(0.0)) / (n * b) * np.einsum(
                "ij,ijk,ik->", s.x, inv[:, :2, :2], s.x
            )
            return fit.rss / (1 - hat / n) ** 2

        scores = [score(b) for b in candidates]
        best = max(
            (b for b, sc in zip(candidates, scores) if sc == min(scores)),
        )
        got = gcv_bandwidth(s, k, candidates)
        assert got == pytest.approx(best)
        # selected bandwidth is interior for this smooth truth
        assert candidates[0] < got < candidates[-1]

    def test_test_bandwidth_deflation(self):
        s = random_sample(40, 2, 61)
        b = gcv_bandwidth(s, get_kernel("epanechnikov"), [0.3])
        assert gcv_test_bandwidth(s, get_kernel("epanechnikov"), [0.3]) == pytest.approx(
            b * 40 ** (-1.0 / 45.0)
        )

    def test_all_singular(self):
        z = np.linspace(0, 1, 30)
        x = np.column_stack([z, z])
        s = TimeSeriesSample(x, np.ones(30))
        with pytest.raises(AllSingularError):
            gcv_bandwidth(s, get_kernel("epanechnikov"), [0.2, 0.3])
