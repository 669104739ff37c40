import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from tvcspec import (
    BadRangeError,
    averaged_contrast_l2,
    averaged_contrast_profile,
    custom_kernel,
    get_kernel,
)
from tvcspec.kernels import KERNEL_NAMES


@pytest.fixture(params=KERNEL_NAMES)
def kernel(request):
    return get_kernel(request.param)


class TestEvaluation:
    def test_uniform_values(self):
        k = get_kernel("uniform")
        assert k(0.0) == 0.5
        assert k(1.5) == 0.0

    def test_epanechnikov_peak(self):
        k = get_kernel("epanechnikov")
        # normalization checked by quadrature
        mass, _ = integrate.quad(k, -1, 1)
        assert abs(mass - 1.0) < 1e-10
        assert_allclose(k(0.0), 0.75, atol=1e-12)

    def test_density_invariants(self, kernel):
        rng = np.random.default_rng(3)
        u = rng.uniform(-1, 1, size=1000)
        vals = kernel(u)
        assert np.all(vals >= 0)
        assert_allclose(vals, kernel(-u), atol=1e-12)
        mass, _ = integrate.quad(kernel, -1, 1, points=[0.0])
        assert abs(mass - 1.0) < 1e-8

    def test_zero_outside_support(self, kernel):
        assert kernel(1.0000001) == 0.0
        assert kernel(-3.0) == 0.0

    def test_invalid_kernels_rejected(self):
        with pytest.raises(ValueError):
            custom_kernel(lambda u: np.where(np.abs(u) <= 1, 1.0, 0.0), "unnormalized")
        with pytest.raises(ValueError):
            custom_kernel(lambda u: np.where((u > -1) & (u < 1), 0.5 + 0.1 * u, 0.0),
                          "asymmetric")
        with pytest.raises(ValueError):
            get_kernel("gaussian")


class TestMoments:
    def test_odd_moment_vanishes(self, kernel):
        assert abs(kernel.moment(1)) < 1e-10

    def test_epanechnikov_second_moment(self):
        # quadrature oracle; analytic value 1/5
        val, _ = integrate.quad(lambda x: x * x * 0.75 * (1 - x * x), -1, 1)
        assert_allclose(get_kernel("epanechnikov").moment(2), val, atol=1e-10)
        assert_allclose(get_kernel("epanechnikov").moment(2), 0.2, atol=1e-10)

    def test_uniform_second_moment(self):
        val, _ = integrate.quad(lambda x: x * x * 0.5, -1, 1)
        assert_allclose(get_kernel("uniform").moment(2), val, atol=1e-10)
        assert_allclose(get_kernel("uniform").moment(2), 1.0 / 3.0, atol=1e-10)


class TestSelfConvolution:
    def test_uniform_triangle(self):
        # (K*K)(u) = (2-|u|)/4 for the uniform kernel
        k = get_kernel("uniform")
        assert_allclose(k.selfconv(0.0), 0.5, atol=1e-6)
        assert_allclose(k.selfconv(1.0), 0.25, atol=1e-6)
        assert k.selfconv(2.5) == 0.0

    def test_matches_direct_quadrature(self, kernel):
        for u in [0.0, 0.3, -0.7, 1.2, 1.9]:
            direct, _ = integrate.quad(
                lambda v: kernel(v) * kernel(u - v), max(-1, u - 1), min(1, u + 1),
                limit=200,
            )
            assert_allclose(kernel.selfconv(u), direct, atol=1e-6)

    def test_properties(self, kernel):
        u = np.linspace(-2.5, 2.5, 401)
        vals = kernel.selfconv(u)
        assert np.all(vals >= -1e-12)
        assert_allclose(vals, kernel.selfconv(-u), atol=1e-12)
        assert np.all(vals[np.abs(u) > 2] == 0.0)
        mass, _ = integrate.quad(kernel.selfconv, -2, 2, limit=300)
        assert abs(mass - 1.0) < 1e-6


class TestContrast:
    def test_uniform_values(self):
        k = get_kernel("uniform")
        assert_allclose(k.contrast(0.0), -0.5, atol=1e-8)
        assert_allclose(k.contrast(1.5), 0.125, atol=1e-6)
        assert k.contrast(3.0) == 0.0

    def test_uniform_squared_integral(self):
        # quadrature oracle over the exact triangular self-convolution
        def contrast_exact(u):
            kk = (2 - abs(u)) / 4 if abs(u) <= 2 else 0.0
            return kk - 2 * (0.5 if abs(u) <= 1 else 0.0)

        oracle, _ = integrate.quad(lambda u: contrast_exact(u) ** 2, -2, 2,
                                   points=[-1, 0, 1], limit=200)
        assert_allclose(oracle, 5.0 / 6.0, atol=1e-10)
        assert_allclose(get_kernel("uniform").contrast_l2(), 5.0 / 6.0, atol=1e-6)

    def test_epanechnikov_squared_integral_mc(self):
        # scrambled quasi-Monte Carlo integration oracle
        from scipy.stats import qmc

        k = get_kernel("epanechnikov")
        u = 4.0 * qmc.Sobol(d=1, scramble=True, seed=99).random(2**21).ravel() - 2.0
        mc = 4.0 * np.mean(k.contrast(u) ** 2)
        assert_allclose(k.contrast_l2(), mc, atol=1e-4)

    def test_algebraic_identity(self, kernel):
        # int contrast^2 = int (K*K)^2 - 4 int (K*K) K + 4 int K^2
        kk2, _ = integrate.quad(lambda u: kernel.selfconv(u) ** 2, -2, 2, limit=300)
        kkk, _ = integrate.quad(lambda u: kernel.selfconv(u) * kernel(u), -1, 1, limit=300)
        k2, _ = integrate.quad(lambda u: kernel(u) ** 2, -1, 1, limit=300)
        assert_allclose(kernel.contrast_l2(), kk2 - 4 * kkk + 4 * k2, atol=1e-8)

    def test_positive(self, kernel):
        assert kernel.contrast_l2() > 0.0


class TestAveragedProfile:
    def test_empty_range(self, kernel):
        assert averaged_contrast_profile(kernel, 0.5, 0.5, 1.23) == 0.0

    def test_outside_support(self, kernel):
        # |y/z| > 2 throughout, integrand vanishes
        assert averaged_contrast_profile(kernel, 0.5, 1.0, 2.5) == 0.0

    def test_uniform_at_origin(self):
        val = averaged_contrast_profile(get_kernel("uniform"), 0.5, 1.0, 0.0)
        assert_allclose(val, 0.5 * math.log(2.0), atol=1e-10)

    def test_bad_range(self, kernel):
        with pytest.raises(BadRangeError):
            averaged_contrast_profile(kernel, 1.0, 0.5, 0.0)
        with pytest.raises(BadRangeError):
            averaged_contrast_profile(kernel, -0.1, 0.5, 0.0)

    def test_additivity_in_upper_limit(self, kernel):
        rng = np.random.default_rng(9)
        for _ in range(10):
            c0 = rng.uniform(0.1, 0.6)
            x1 = c0 + rng.uniform(0.05, 0.5)
            x2 = x1 + rng.uniform(0.05, 0.5)
            y = rng.uniform(-1.5, 1.5)
            q1 = averaged_contrast_profile(kernel, c0, x1, y)
            q2 = averaged_contrast_profile(kernel, c0, x2, y)
            seg = averaged_contrast_profile(kernel, x1, x2, y)
            assert abs((q2 - q1) - seg) < 1e-8

    def test_matches_direct_quadrature(self, kernel):
        for (c0, x, y) in [(0.5, 1.0, 0.7), (0.3, 0.9, -0.4), (0.8, 1.6, 1.1)]:
            direct, _ = integrate.quad(
                lambda z: (2 * kernel(y / z) - kernel.selfconv(y / z)) / z,
                c0, x, limit=300,
            )
            assert_allclose(
                averaged_contrast_profile(kernel, c0, x, y), direct, atol=1e-6
            )

    def test_cauchy_schwarz_bound(self, kernel):
        # int profile(c_max, y)^2 dy <= log(c_max/c_min) (c_max - c_min) int contrast^2
        rng = np.random.default_rng(4)
        for _ in range(20):
            c_min = rng.uniform(0.05, 0.9)
            c_max = c_min + rng.uniform(0.05, 1.0)
            lhs = averaged_contrast_l2(kernel, c_min, c_max)
            rhs = math.log(c_max / c_min) * (c_max - c_min) * kernel.contrast_l2()
            assert lhs <= rhs + 1e-6
