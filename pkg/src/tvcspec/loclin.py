"""Local linear kernel estimation of time-varying regression coefficients.

The estimator solves, at every grid point t_i, the 2p-by-2p system built from
the kernel-weighted design moments

    S_l(t) = (n b)^-1 sum_i x_i x_i' [(t_i - t)/b]^l K((t_i - t)/b)

and the matching response moments.  The block system

    [[S_0, S_1], [S_1, S_2]] eta(t) = [R_0, R_1]

yields the coefficient estimate and, after dividing the second block by b,
its derivative.  No boundary kernels are used; the local linear estimator's
automatic boundary correction is relied on near the interval ends.

Per-point solves use direct factorizations with a 1-norm condition estimate;
points whose condition exceeds 1e12 raise :class:`SingularDesignError` rather
than being silently regularized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._sums import StencilSet, kernel_stencil
from .data import TimeSeriesSample
from .errors import AllSingularError, SingularDesignError

__all__ = [
    "LocalLinearFit",
    "NullSpec",
    "ParametricFamily",
    "constant_family",
    "linear_family",
    "zero_family",
    "design_moment",
    "response_moment",
    "local_linear_fit",
    "fit_rss_batch",
    "rss_null",
    "gcv_bandwidth",
    "gcv_test_bandwidth",
    "block_design_matrices",
    "block_design_inverses",
    "stack_inverses",
]

CONDITION_LIMIT = 1e12


# ---------------------------------------------------------------------------
# moments


def design_moment(sample: TimeSeriesSample, kernel, b: float, t: float, l: int):
    """Kernel-weighted design moment S_l(t), a p-by-p matrix (0^0 := 1)."""
    _check_bandwidth(b)
    u = (sample.time_grid - t) / b
    w = _power_weight(u, l) * kernel(u) / (sample.n * b)
    return np.einsum("i,ij,ik->jk", w, sample.x, sample.x)


def response_moment(sample: TimeSeriesSample, kernel, b: float, t: float, l: int):
    """Kernel-weighted response moment R_l(t), a p-vector."""
    _check_bandwidth(b)
    u = (sample.time_grid - t) / b
    w = _power_weight(u, l) * kernel(u) / (sample.n * b)
    return (w * sample.y) @ sample.x


def _power_weight(u, l):
    if l == 0:
        return np.ones_like(u)
    return u**l


def _check_bandwidth(b):
    if not 0.0 < b < 1.0:
        raise ValueError(f"bandwidth must lie in (0, 1), got {b}")


# ---------------------------------------------------------------------------
# block system on the full grid


def block_design_matrices(sample: TimeSeriesSample, kernel, b: float) -> np.ndarray:
    """The 2p-by-2p block design matrices at every grid point, shape (n, 2p, 2p)."""
    _check_bandwidth(b)
    n, p = sample.n, sample.p
    xx = (sample.x[:, :, None] * sample.x[:, None, :]).reshape(n, p * p)
    sums = StencilSet(
        n, [kernel_stencil(n, b, kernel, l) for l in range(3)]
    ).apply(xx)
    s0, s1, s2 = (s.reshape(n, p, p) for s in sums)
    a = np.empty((n, 2 * p, 2 * p))
    a[:, :p, :p] = s0
    a[:, :p, p:] = np.swapaxes(s1, 1, 2)
    a[:, p:, :p] = s1
    a[:, p:, p:] = s2
    return a


def stack_inverses(mats: np.ndarray, t_grid: np.ndarray):
    """Inverses and 1-norm condition estimates of a stack of square matrices.

    Raises :class:`SingularDesignError` at the first grid point whose
    condition exceeds ``CONDITION_LIMIT`` or whose factorization fails.
    """
    try:
        inv = np.linalg.inv(mats)
    except np.linalg.LinAlgError:
        bad = _first_unsolvable(mats)
        raise SingularDesignError(t_grid[bad]) from None
    norm_a = np.abs(mats).sum(axis=-2).max(axis=-1)
    norm_inv = np.abs(inv).sum(axis=-2).max(axis=-1)
    cond = norm_a * norm_inv
    bad = ~np.isfinite(cond) | (cond > CONDITION_LIMIT)
    if bad.any():
        i = int(np.argmax(bad))
        c = float(cond[i]) if np.isfinite(cond[i]) else None
        raise SingularDesignError(t_grid[i], c)
    return inv, cond


def block_design_inverses(sample: TimeSeriesSample, kernel, b: float,
                          matrices: np.ndarray | None = None):
    """Inverses and condition estimates of the 2p-by-2p block design matrices."""
    a = matrices if matrices is not None else block_design_matrices(sample, kernel, b)
    return stack_inverses(a, sample.time_grid)


def _first_unsolvable(a):
    for i in range(a.shape[0]):
        try:
            np.linalg.inv(a[i])
        except np.linalg.LinAlgError:
            return i
    return 0


@dataclass(frozen=True)
class LocalLinearFit:
    """Local linear fit over the whole sample grid at one bandwidth.

    ``beta`` and ``beta_deriv`` hold the coefficient curves and their
    derivatives row-per-grid-point; ``fitted + residuals == y`` exactly as
    computed, and ``rss`` is the float sum of squared residuals.
    """

    bandwidth: float
    beta: np.ndarray
    beta_deriv: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    rss: float
    condition: np.ndarray = field(repr=False)


def local_linear_fit(sample: TimeSeriesSample, kernel, b: float) -> LocalLinearFit:
    """Fit the coefficient curves at every grid point with bandwidth ``b``."""
    n, p = sample.n, sample.p
    a = block_design_matrices(sample, kernel, b)
    xy = sample.x * sample.y[:, None]
    r0, r1 = StencilSet(
        n, [kernel_stencil(n, b, kernel, l) for l in range(2)]
    ).apply(xy)
    rhs = np.concatenate([r0, r1], axis=1)

    _, cond = block_design_inverses(sample, kernel, b, matrices=a)
    eta = np.linalg.solve(a, rhs[..., None])[..., 0]

    beta = eta[:, :p]
    beta_deriv = eta[:, p:] / b
    fitted = np.einsum("ij,ij->i", sample.x, beta)
    residuals = sample.y - fitted
    return LocalLinearFit(
        bandwidth=float(b),
        beta=beta,
        beta_deriv=beta_deriv,
        fitted=fitted,
        residuals=residuals,
        rss=float(residuals @ residuals),
        condition=cond,
    )


def fit_rss_batch(sample: TimeSeriesSample, responses: np.ndarray, kernel, b: float,
                  inverses: np.ndarray | None = None) -> np.ndarray:
    """Residual sums of squares of local linear fits for many responses at once.

    ``responses`` is (n, m); returns the length-m RSS vector.  Used by the
    resampling bootstrap, where the design (hence its factorization) is
    shared across draws.
    """
    n, p = sample.n, sample.p
    m = responses.shape[1]
    if inverses is None:
        inverses, _ = block_design_inverses(sample, kernel, b)
    vals = (sample.x[:, :, None] * responses[:, None, :]).reshape(n, p * m)
    r0, r1 = StencilSet(
        n, [kernel_stencil(n, b, kernel, l) for l in range(2)]
    ).apply(vals)
    rhs = np.concatenate(
        [r0.reshape(n, p, m), r1.reshape(n, p, m)], axis=1
    )  # (n, 2p, m)
    eta = np.einsum("nij,njm->nim", inverses, rhs)
    fitted = np.einsum("nj,njm->nm", sample.x, eta[:, :p, :])
    resid = responses - fitted
    return np.einsum("nm,nm->m", resid, resid)


# ---------------------------------------------------------------------------
# null hypotheses


@dataclass(frozen=True)
class ParametricFamily:
    """Coefficient family beta0(t, theta), linear in theta, with an OLS fit.

    ``design(sample)`` returns the n-by-q matrix D with x_i' beta0(t_i, theta)
    = D theta, so least squares delivers the root-n consistent estimate the
    prewhitening step needs.
    """

    name: str
    design: Callable[[TimeSeriesSample], np.ndarray]


def constant_family() -> ParametricFamily:
    """beta0(t, theta) = theta, one free constant per coordinate."""
    return ParametricFamily("constant", lambda s: np.asarray(s.x))


def linear_family() -> ParametricFamily:
    """beta0_j(t) = theta_j + theta_{p+j} t, affine in time per coordinate."""
    return ParametricFamily(
        "linear", lambda s: np.hstack([s.x, s.x * s.time_grid[:, None]])
    )


def zero_family() -> ParametricFamily:
    """The empty family: prewhitening with it changes nothing."""
    return ParametricFamily("zero", lambda s: np.empty((s.n, 0)))


@dataclass(frozen=True)
class NullSpec:
    """A null hypothesis about the coefficient curves.

    kind ``simple``: the whole curve equals a known ``beta0`` (``None`` means
    identically zero).  kind ``component``: the first ``p1`` coordinates equal
    a known ``beta0_first`` while the rest stay nonparametric.  kind
    ``parametric``: the curve lies in ``family`` up to an unknown parameter;
    such nulls must be prewhitened into simple zero nulls before testing.

    ``bias_free`` marks nulls whose curvature vanishes under H0 (zero nulls
    and prewhitened nulls), letting the asymptotic calibration drop the bias
    term.
    """

    kind: str
    beta0: Callable[[float], np.ndarray] | None = None
    p1: int | None = None
    beta0_first: Callable[[float], np.ndarray] | None = None
    family: ParametricFamily | None = None
    bias_free: bool = False

    @classmethod
    def zero(cls) -> "NullSpec":
        return cls(kind="simple", bias_free=True)

    @classmethod
    def simple(cls, beta0, bias_free=False) -> "NullSpec":
        return cls(kind="simple", beta0=beta0, bias_free=bias_free)

    @classmethod
    def component(cls, p1: int, beta0_first=None) -> "NullSpec":
        if p1 < 1:
            raise ValueError(f"component null needs p1 >= 1, got {p1}")
        return cls(kind="component", p1=int(p1), beta0_first=beta0_first,
                   bias_free=beta0_first is None)

    @classmethod
    def parametric(cls, family: ParametricFamily) -> "NullSpec":
        return cls(kind="parametric", family=family)

    def beta0_values(self, t_grid: np.ndarray, p: int) -> np.ndarray:
        """Null coefficient curves evaluated on the grid, shape (n, p)."""
        if self.kind != "simple":
            raise ValueError("beta0_values applies to simple nulls only")
        if self.beta0 is None:
            return np.zeros((t_grid.shape[0], p))
        return np.array([np.broadcast_to(np.asarray(self.beta0(t), dtype=float), (p,))
                         for t in t_grid])

    def null_fitted(self, sample: TimeSeriesSample) -> np.ndarray:
        """Fitted values x_i' beta0(t_i) under a simple null."""
        if self.beta0 is None:
            return np.zeros(sample.n)
        b0 = self.beta0_values(sample.time_grid, sample.p)
        return np.einsum("ij,ij->i", sample.x, b0)


def rss_null(sample: TimeSeriesSample, null: NullSpec, kernel, b: float) -> float:
    """Residual sum of squares under the null hypothesis.

    Simple nulls subtract the known curve directly.  Component nulls remove
    the known first block from the response and fit the remaining regressors
    by local linear regression with the same bandwidth ``b`` as the
    alternative fit.
    """
    if null.kind == "simple":
        resid = sample.y - null.null_fitted(sample)
        return float(resid @ resid)
    if null.kind == "component":
        p1 = null.p1
        if p1 > sample.p:
            raise ValueError(f"component null has p1={p1} > p={sample.p}")
        if null.beta0_first is None:
            ystar = sample.y.copy()
        else:
            b0 = np.array([
                np.broadcast_to(np.asarray(null.beta0_first(t), dtype=float), (p1,))
                for t in sample.time_grid
            ])
            ystar = sample.y - np.einsum("ij,ij->i", sample.x[:, :p1], b0)
        if p1 == sample.p:
            # degenerate component: nothing left to fit nonparametrically
            return float(ystar @ ystar)
        sub = TimeSeriesSample(sample.x[:, p1:], ystar)
        return local_linear_fit(sub, kernel, b).rss
    raise ValueError("parametric nulls must be prewhitened before computing RSS")


# ---------------------------------------------------------------------------
# bandwidth selection


def gcv_bandwidth(sample: TimeSeriesSample, kernel, candidates) -> float:
    """Generalized cross-validation choice among candidate bandwidths.

    Score: RSS(b) / (1 - tr(hat)/n)^2 with the exact hat diagonal
    K(0)/(n b) * z_i' S^-1(t_i) z_i.  Ties break to the largest bandwidth
    (the smoother fit).  Raises :class:`AllSingularError` if every candidate
    fails.
    """
    cands = sorted(float(b) for b in candidates)
    if not cands:
        raise ValueError("candidate grid is empty")
    n = sample.n
    k0 = float(kernel(0.0))
    best_b, best_score = None, np.inf
    for b in cands:
        try:
            inv, _ = block_design_inverses(sample, kernel, b)
            fit = local_linear_fit(sample, kernel, b)
        except SingularDesignError:
            continue
        top = inv[:, : sample.p, : sample.p]
        hat_tr = k0 / (n * b) * float(
            np.einsum("ij,ijk,ik->", sample.x, top, sample.x)
        )
        denom = 1.0 - hat_tr / n
        score = fit.rss / denom**2 if denom > 0 else np.inf
        if score <= best_score:
            best_b, best_score = b, score
    if best_b is None:
        raise AllSingularError("all candidate bandwidths produced singular designs")
    return best_b


def gcv_test_bandwidth(sample: TimeSeriesSample, kernel, candidates) -> float:
    """GCV-selected bandwidth deflated by n^(-1/45) for testing."""
    return gcv_bandwidth(sample, kernel, candidates) * sample.n ** (-1.0 / 45.0)
