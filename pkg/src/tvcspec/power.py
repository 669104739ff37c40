"""Local-power analytics for the single-bandwidth and averaged tests.

Against local alternatives shrinking at the rate n^(-4/9) with bandwidth
c n^(-2/9), the asymptotic power of the single-bandwidth test is a normal
probability driven by two functionals of the alternative: the L2 mass F1 and
the curvature mass F2.  The averaged test replaces the single scale c with a
range [c_min, c_max].  Both powers, the power-maximizing scale, and the
power ratio of the averaged to the single test are computed here; the ratio
does not depend on the dependence structure of the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.stats import norm

from .errors import BadRangeError, NonpositiveError
from .kernels import Kernel, averaged_contrast_l2

__all__ = [
    "PowerSpec",
    "f_functionals",
    "local_power_single",
    "optimal_c",
    "local_power_averaged",
    "averaged_vs_single_power_ratio",
    "power_ratio_curve",
]

_FD_STEP = 1e-4  # balances truncation and rounding for double precision


@dataclass(frozen=True)
class PowerSpec:
    """Inputs of the local power formulas.

    ``trace_h2`` is the integrated squared-trace factor of the variance; for
    abstract power analysis it is a user-supplied scalar (default 1), since
    the comparisons computed here are invariant to it.  ``sigma`` defaults to
    the kernel contrast factor times that scalar.
    """

    f1: float
    f2: float
    kernel: Kernel
    alpha: float = 0.1
    mu2: float | None = None
    trace_h2: float = 1.0
    sigma: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mu2 is None:
            object.__setattr__(self, "mu2", self.kernel.moment(2))
        if self.sigma is None:
            object.__setattr__(
                self, "sigma", math.sqrt(self.kernel.contrast_l2() * self.trace_h2)
            )
        if self.sigma <= 0.0:
            raise NonpositiveError("sigma must be positive")


def f_functionals(f, m_matrix, f_second=None) -> tuple[float, float]:
    """The pair (F1, F2) for a localized alternative profile ``f`` on [-1, 1].

    F1 integrates f' M f and F2 integrates f'' ' M f'' over [-1, 1], with the
    second derivative taken from ``f_second`` when given and otherwise from
    five-point central differences (step 1e-4; the profile must be evaluable
    slightly outside the interval).
    """
    m = np.atleast_2d(np.asarray(m_matrix, dtype=float))

    def as_vec(fn, t):
        return np.atleast_1d(np.asarray(fn(t), dtype=float))

    if f_second is None:
        h = _FD_STEP

        def f_second(t):
            return (
                -as_vec(f, t + 2 * h)
                + 16.0 * as_vec(f, t + h)
                - 30.0 * as_vec(f, t)
                + 16.0 * as_vec(f, t - h)
                - as_vec(f, t - 2 * h)
            ) / (12.0 * h * h)

    def quad_form(fn):
        def integrand(t):
            v = as_vec(fn, t)
            return float(v @ m @ v)

        val, _ = integrate.quad(integrand, -1.0, 1.0, epsabs=1e-10, limit=200)
        return val

    return quad_form(f), quad_form(f_second)


def _r_single(spec: PowerSpec, c: float) -> float:
    return (math.sqrt(c) * spec.f1 - c**4.5 * spec.mu2**2 * spec.f2 / 4.0) / spec.sigma


def local_power_single(spec: PowerSpec, c: float) -> float:
    """Asymptotic power of the single-bandwidth test at scale c > 0."""
    if c <= 0.0:
        raise NonpositiveError(f"bandwidth scale must be positive, got {c}")
    z = norm.ppf(1.0 - spec.alpha)
    return float(norm.cdf(_r_single(spec, c) - z))


def optimal_c(f1: float, f2: float, mu2: float) -> float:
    """The bandwidth scale maximizing the single-test power: (4 F1 / (9 mu2^2 F2))^(1/4)."""
    if f1 <= 0.0 or f2 <= 0.0 or mu2 <= 0.0:
        raise NonpositiveError("optimal scale needs F1 > 0, F2 > 0 and mu2 > 0")
    return (4.0 * f1 / (9.0 * mu2**2 * f2)) ** 0.25


def local_power_averaged(spec: PowerSpec, c_min: float, c_max: float) -> float:
    """Asymptotic power of the averaged test over scales [c_min, c_max]."""
    if not 0.0 < c_min < c_max:
        raise BadRangeError(f"need 0 < c_min < c_max, got ({c_min}, {c_max})")
    sigma_star = math.sqrt(
        averaged_contrast_l2(spec.kernel, c_min, c_max) * spec.trace_h2
    )
    r2 = (
        (c_max - c_min) * spec.f1
        - (c_max**5 - c_min**5) * spec.mu2**2 * spec.f2 / 20.0
    ) / sigma_star
    z = norm.ppf(1.0 - spec.alpha)
    return float(norm.cdf(r2 - z))


def averaged_vs_single_power_ratio(kernel: Kernel, c_min_scaled: float) -> tuple[float, float]:
    """Power-drift ratio of the averaged test to the optimal single test.

    The scales are expressed relative to the single test's bandwidth scale:
    the lower end is ``c_min_scaled`` in (0, 1] and the upper end solves

        x^4 + c x^3 + c^2 x^2 + c^3 x + c^4 = 5,   c = c_min_scaled,

    the coupling that makes the ratio free of the alternative's F1 and F2.
    Returns (upper scale, ratio); ratio > 1 means the averaged test is
    asymptotically more powerful.
    """
    c = float(c_min_scaled)
    if not 0.0 < c <= 1.0:
        raise BadRangeError(f"c_min_scaled must lie in (0, 1], got {c}")

    def quartic(x):
        return x**4 + c * x**3 + c**2 * x**2 + c**3 * x + c**4 - 5.0

    hi = 5.0**0.25 + 1.0
    # left-hand side is increasing on [c, hi] and quartic(c) = 5c^4 - 5 <= 0
    c_max = float(optimize.brentq(quartic, c, hi, xtol=1e-14, rtol=8.9e-16))
    ratio = (c_max - c) * math.sqrt(kernel.contrast_l2()) / math.sqrt(
        averaged_contrast_l2(kernel, c, c_max)
    )
    return c_max, ratio


def power_ratio_curve(kernel: Kernel, points: int = 50) -> np.ndarray:
    """Rows (c_min_scaled, c_max_scaled, ratio) on an interior grid of (0, 1)."""
    if points < 1:
        raise ValueError("need at least one point")
    out = np.empty((points, 3))
    for i, c in enumerate((np.arange(points) + 1.0) / (points + 1.0)):
        c_max, ratio = averaged_vs_single_power_ratio(kernel, c)
        out[i] = (c, c_max, ratio)
    return out
