"""Kernel functions and the kernel-derived constants used by the calibrations.

A kernel here is a symmetric probability density supported on [-1, 1].  The
test calibrations need, besides plain evaluation, the self-convolution K*K,
the smoothing contrast K*K - 2K (the effective kernel of the RSS difference),
its squared integral, and the bandwidth-averaged contrast profile obtained by
integrating the contrast over a range of bandwidth scales.

The self-convolution is tabulated once on a fine uniform grid over [-2, 2] so
that later evaluations inside O(n^2) bootstrap loops are O(1) lookups.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .errors import BadRangeError

__all__ = [
    "Kernel",
    "get_kernel",
    "custom_kernel",
    "averaged_contrast_profile",
    "averaged_contrast_l2",
    "KERNEL_NAMES",
]

KERNEL_NAMES = ("uniform", "epanechnikov", "triangular")

# 4001 nodes over [-2, 2]: linear interpolation error is about 1.3e-7,
# comfortably below the 1e-6 evaluation contract.
_GRID_SIZE = 4001
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _uniform(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _triangular(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 1.0 - np.abs(u), 0.0)


_BUILTINS = {
    "uniform": _uniform,
    "epanechnikov": _epanechnikov,
    "triangular": _triangular,
}


class Kernel:
    """Symmetric density on [-1, 1] with cached self-convolution and moments.

    Parameters
    ----------
    name : str
        Identifier, one of ``uniform``, ``epanechnikov``, ``triangular`` or
        ``custom``.
    fn : callable
        Vectorized evaluation ``u -> K(u)``.  Must vanish outside [-1, 1],
        be symmetric, nonnegative and integrate to one.
    breakpoints : sequence of float, optional
        Interior points where ``fn`` is not smooth, used to split quadrature
        intervals.  The support endpoints are always included.
    validate : bool
        Check the density invariants at construction and reject eagerly.

    Instances are immutable after construction and safe to share across
    concurrent workers.
    """

    def __init__(self, name, fn, breakpoints=(-1.0, 0.0, 1.0), validate=True):
        self.name = str(name)
        self._fn = fn
        self._breaks = tuple(sorted(set(float(b) for b in breakpoints) | {-1.0, 1.0}))
        if validate:
            self._validate()
        self._grid_u = np.linspace(-2.0, 2.0, _GRID_SIZE)
        self._grid_kk = np.array([self._selfconv_quad(u) for u in self._grid_u])
        self._moments: dict[int, float] = {}
        self._contrast_l2: float | None = None
        self._profile_l2: dict[tuple[float, float], float] = {}

    # -- evaluation ---------------------------------------------------------

    def __call__(self, u):
        """Evaluate K(u); zero outside [-1, 1]."""
        out = self._fn(u)
        if np.isscalar(u):
            return float(out)
        return np.asarray(out, dtype=float)

    def moment(self, order: int) -> float:
        """Return ``mu_h = int u^h K(u) du`` by adaptive quadrature.

        Absolute quadrature error below 1e-10.
        """
        if order < 0:
            raise ValueError("moment order must be >= 0")
        if order not in self._moments:
            val, _ = integrate.quad(
                lambda u: u**order * float(self._fn(u)),
                -1.0,
                1.0,
                points=[b for b in self._breaks if -1.0 < b < 1.0],
                epsabs=1e-12,
                limit=200,
            )
            self._moments[order] = val
        return self._moments[order]

    def selfconv(self, u):
        """Evaluate the self-convolution (K*K)(u) from the cached grid.

        Linear interpolation on the 4001-point tabulation; zero for |u| > 2.
        """
        scalar = np.isscalar(u)
        out = np.interp(np.asarray(u, dtype=float), self._grid_u, self._grid_kk,
                        left=0.0, right=0.0)
        return float(out) if scalar else out

    def contrast(self, u):
        """Smoothing contrast (K*K)(u) - 2 K(u) that drives the RSS difference."""
        return self.selfconv(u) - 2.0 * self(u)

    def contrast_l2(self) -> float:
        """Squared integral of the contrast over its support [-2, 2].

        Quadrature error below 1e-6 (the integrand uses the slow exact
        self-convolution path, not the interpolation grid).
        """
        if self._contrast_l2 is None:
            pts = sorted(set(self._breaks) | {-2.0, 2.0})

            def integrand(u):
                return (self._selfconv_quad(u) - 2.0 * float(self._fn(u))) ** 2

            total = 0.0
            for lo, hi in zip(pts[:-1], pts[1:]):
                val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-10, limit=200)
                total += val
            self._contrast_l2 = total
        return self._contrast_l2

    # -- internals ----------------------------------------------------------

    def _selfconv_quad(self, u: float) -> float:
        """(K*K)(u) by piecewise Gauss-Legendre quadrature, node error < 1e-8."""
        u = float(u)
        lo, hi = max(-1.0, u - 1.0), min(1.0, u + 1.0)
        if lo >= hi:
            return 0.0
        cuts = {lo, hi}
        for b in self._breaks:
            if lo < b < hi:
                cuts.add(b)
            # kink of K(u - v) at v = u - b
            if lo < u - b < hi:
                cuts.add(u - b)
        edges = sorted(cuts)
        total = 0.0
        for a, c in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + c), 0.5 * (c - a)
            v = mid + half * _GL_NODES
            total += half * float(np.sum(_GL_WEIGHTS * self._fn(v) * self._fn(u - v)))
        return total

    def _validate(self):
        rng = np.random.default_rng(0)
        u = rng.uniform(-1.0, 1.0, size=1000)
        k_u = np.asarray(self._fn(u), dtype=float)
        if not np.all(np.isfinite(k_u)):
            raise ValueError(f"kernel {self.name!r}: non-finite values on [-1, 1]")
        if np.any(k_u < -1e-12):
            raise ValueError(f"kernel {self.name!r}: negative values on [-1, 1]")
        if np.max(np.abs(k_u - np.asarray(self._fn(-u), dtype=float))) > 1e-12:
            raise ValueError(f"kernel {self.name!r}: not symmetric")
        outside = np.array([-5.0, -2.0, -1.5, -1.0000001, 1.0000001, 1.5, 2.0, 5.0])
        if np.max(np.abs(np.asarray(self._fn(outside), dtype=float))) > 0.0:
            raise ValueError(f"kernel {self.name!r}: support is not [-1, 1]")
        mass, _ = integrate.quad(
            lambda x: float(self._fn(x)),
            -1.0,
            1.0,
            points=[b for b in self._breaks if -1.0 < b < 1.0],
            epsabs=1e-10,
            limit=200,
        )
        if abs(mass - 1.0) > 1e-8:
            raise ValueError(f"kernel {self.name!r}: integrates to {mass!r}, not 1")

    def __repr__(self):
        return f"Kernel({self.name!r})"


_KERNEL_CACHE: dict[str, Kernel] = {}


def get_kernel(name: str) -> Kernel:
    """Return a built-in kernel by name (cached, immutable)."""
    key = name.strip().lower()
    if key not in _BUILTINS:
        raise ValueError(f"unknown kernel {name!r}; choose from {KERNEL_NAMES}")
    if key not in _KERNEL_CACHE:
        _KERNEL_CACHE[key] = Kernel(key, _BUILTINS[key])
    return _KERNEL_CACHE[key]


def custom_kernel(fn, name="custom", breakpoints=(-1.0, 0.0, 1.0)) -> Kernel:
    """Wrap a user-supplied density into a validated :class:`Kernel`.

    ``fn`` may be scalar-only; it is vectorized if needed.
    """
    try:
        probe = np.asarray(fn(np.array([0.0, 0.5])), dtype=float)
        vec_fn = fn if probe.shape == (2,) else np.vectorize(fn, otypes=[float])
    except Exception:
        vec_fn = np.vectorize(fn, otypes=[float])
    return Kernel(name, vec_fn, breakpoints=breakpoints)


_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(16)


def averaged_contrast_profile(kernel: Kernel, c_min: float, upper: float, y: float) -> float:
    """Integral of [2K - K*K](y/z) / z over bandwidth scales z in [c_min, upper].

    This profile replaces the plain contrast when the test is averaged over a
    bandwidth range.  After substituting u = y/z the integrand is
    -contrast(u)/u; it is integrated by Gauss-Legendre quadrature piecewise
    between the tabulation knots of the self-convolution, which makes the
    result exactly additive in the upper limit.  Error below 1e-6.  Raises
    :class:`BadRangeError` when ``c_min > upper``; the empty range returns 0.
    """
    if c_min <= 0.0:
        raise BadRangeError(f"c_min must be positive, got {c_min}")
    if c_min > upper:
        raise BadRangeError(f"empty scale range: c_min={c_min} > upper={upper}")
    if c_min == upper:
        return 0.0
    y = abs(float(y))
    if y == 0.0:
        return -kernel.contrast(0.0) * math.log(upper / c_min)
    u_lo = y / upper
    u_hi = min(y / c_min, 2.0)
    if u_lo >= 2.0 or u_lo >= u_hi:
        return 0.0
    grid = kernel._grid_u
    inside = grid[(grid > u_lo) & (grid < u_hi)]
    breaks = [b for b in kernel._breaks if u_lo < b < u_hi]
    edges = np.unique(np.concatenate([[u_lo, u_hi], inside, breaks]))
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL16_NODES).ravel()
    vals = -kernel.contrast(nodes) / nodes
    weights = (half[:, None] * _GL16_WEIGHTS).ravel()
    return float(weights @ vals)


def averaged_contrast_l2(kernel: Kernel, c_min: float, c_max: float) -> float:
    """Squared integral over the real line of the averaged contrast profile.

    This is the kernel factor of the averaged-test variance.  The profile
    vanishes for |y| > 2 c_max and is even in y.
    """
    if not 0.0 < c_min < c_max:
        raise BadRangeError(f"need 0 < c_min < c_max, got ({c_min}, {c_max})")
    key = (float(c_min), float(c_max))
    cache = kernel._profile_l2
    if key not in cache:
        # the profile has kinks where y/c_min or y/c_max crosses a kernel break
        pts = sorted(
            {b * c for b in (*kernel._breaks, 2.0) for c in (c_min, c_max)
             if 0.0 < b * c < 2.0 * c_max}
        )
        val, _ = integrate.quad(
            lambda y: averaged_contrast_profile(kernel, c_min, c_max, y) ** 2,
            0.0,
            2.0 * c_max,
            points=pts or None,
            epsabs=1e-10,
            limit=300,
        )
        cache[key] = 2.0 * val
    return cache[key]
