"""Calibration backends that turn a statistic into a p-value.

Three routes are provided:

* WILD: the robust wild bootstrap.  The averaged RSS-difference statistic is
  asymptotically a Gaussian quadratic form driven by the long-run covariance
  of x_i * eps_i, so its null distribution is simulated by redrawing the
  i.i.d. standard normal vectors inside that form.  This stays valid under
  non-stationarity, temporal dependence and endogeneity.
* ASYM: plug-in normal approximation from the asymptotic null distributions,
  kept mostly as a comparison point; it converges slowly and is rough at the
  time-interval boundaries.
* IID: the classic residual bootstrap that resamples centered residuals
  i.i.d.; consistent only when the errors are i.i.d. and exogenous.

Empirical p-values use (1 + #{draws >= observed}) / (B + 1), which avoids
exact zeros.  Rejection is upper-tail throughout: large statistics indicate
violation of the null.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from ._sums import StencilSet, kernel_stencil
from .data import BandwidthGrid, TimeSeriesSample
from .errors import BadDrawCountError, BadRangeError, NoRateFormError
from .glrt import StatisticValue, averaged_statistic, glrt_single
from .kernels import averaged_contrast_l2
from .loclin import (
    NullSpec,
    block_design_inverses,
    fit_rss_batch,
    local_linear_fit,
    rss_null,
    stack_inverses,
)
from .lrcov import LongRunCov, longrun_cov

__all__ = [
    "TestOutcome",
    "GaussianQuadraticForm",
    "wild_bootstrap_pvalue",
    "wild_bootstrap_component_pvalue",
    "asym_pvalue_single",
    "asym_pvalue_averaged",
    "iid_residual_bootstrap_pvalue",
    "component_variance_diagnostic",
]

_MIN_DRAWS = 99
# centered second-order accurate integration rule node count for the
# bandwidth integral of the averaged asymptotic calibration
_SIMPSON_NODES = 13


@dataclass(frozen=True)
class TestOutcome:
    """Result of one calibrated test.

    ``draws`` holds the sorted simulated statistic values for bootstrap
    methods (``None`` for ASYM).  ``diagnostics`` records the plug-in
    quantities that entered the calibration.
    """

    statistic: StatisticValue
    method: str
    p_value: float
    draws: np.ndarray | None = field(repr=False, default=None)
    diagnostics: dict = field(default_factory=dict)
    seed: object = None


def _as_grid(grid_or_b) -> BandwidthGrid:
    if isinstance(grid_or_b, BandwidthGrid):
        return grid_or_b
    if np.isscalar(grid_or_b):
        return BandwidthGrid.single(float(grid_or_b))
    return BandwidthGrid(values=tuple(grid_or_b))


def _rng(seed) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def _default_lrcov(sample, kernel, grid: BandwidthGrid) -> LongRunCov:
    """Long-run covariance from the middle-bandwidth alternative-fit residuals."""
    fit = local_linear_fit(sample, kernel, grid.middle)
    return longrun_cov(sample, fit.residuals, kernel=kernel)


def _empirical_pvalue(draws: np.ndarray, observed: float) -> float:
    return (1.0 + int(np.count_nonzero(draws >= observed))) / (draws.shape[0] + 1.0)


class GaussianQuadraticForm:
    """Per-draw recipe for the bootstrap approximation of the averaged statistic.

    For i.i.d. standard normal p-vectors V_1..V_n the simulated value is

        sum_b { 2 sum_i W_i' [S_b(t_i)^-1 T_b(t_i)]_head
                - sum_i (x_i' [S_b(t_i)^-1 T_b(t_i)]_head)^2 }

    where W_i = root(t_i) V_i uses the long-run covariance square root,
    T_b(t_i) stacks the order-0 and order-1 kernel moment sums of the W panel,
    and ``head`` denotes the first p coordinates.  The realized design moment
    matrices stand in for their expectations.  All data-dependent blocks are
    precomputed at construction; draws only touch the Gaussian panel.

    The kernel stencils are exactly zero outside the kernel support, so the
    FFT evaluation equals the untruncated double loop up to roundoff.
    """

    def __init__(self, sample: TimeSeriesSample, kernel, grid, lrcov: LongRunCov):
        grid = _as_grid(grid)
        self.sample = sample
        self.kernel = kernel
        self.grid = grid
        if lrcov.values.shape[0] != sample.n or lrcov.p != sample.p:
            raise ValueError("long-run covariance shape does not match the sample")
        self.roots = lrcov.sqrt
        self._inverses = [
            block_design_inverses(sample, kernel, b)[0] for b in grid.values
        ]
        n = sample.n
        stencils = []
        for b in grid.values:
            stencils.append(kernel_stencil(n, b, kernel, 0))
            stencils.append(kernel_stencil(n, b, kernel, 1))
        self._stencils = StencilSet(n, stencils)

    def evaluate(self, v: np.ndarray) -> float:
        """Value of the form for one Gaussian panel ``v`` of shape (n, p)."""
        return float(self.evaluate_panel(v[None, :, :])[0])

    def evaluate_panel(self, v: np.ndarray) -> np.ndarray:
        """Values for a stack of panels, shape (m, n, p) -> (m,)."""
        n, p = self.sample.n, self.sample.p
        m = v.shape[0]
        w = np.einsum("nij,mnj->mni", self.roots, v)
        w_cols = w.transpose(1, 0, 2).reshape(n, m * p)
        sums = self._stencils.apply(w_cols)
        total = np.zeros(m)
        for j in range(len(self.grid.values)):
            t0 = sums[2 * j].reshape(n, m, p)
            t1 = sums[2 * j + 1].reshape(n, m, p)
            tvec = np.concatenate([t0, t1], axis=2)
            head = np.einsum("nij,nmj->nmi", self._inverses[j][:, :p, :], tvec)
            term1 = 2.0 * np.einsum("mni,nmi->m", w, head)
            proj = np.einsum("ni,nmi->nm", self.sample.x, head)
            term2 = np.einsum("nm,nm->m", proj, proj)
            total += term1 - term2
        return total

    def simulate(self, size: int, rng: np.random.Generator,
                 panels: np.ndarray | None = None) -> np.ndarray:
        """Draw ``size`` values; pass ``panels`` to reuse Gaussian draws."""
        n, p = self.sample.n, self.sample.p
        if panels is None:
            panels = rng.standard_normal((size, n, p))
        out = np.empty(size)
        chunk = max(1, int(4e6 // max(1, n * p)))
        for start in range(0, size, chunk):
            stop = min(size, start + chunk)
            out[start:stop] = self.evaluate_panel(panels[start:stop])
        return out


def wild_bootstrap_pvalue(sample: TimeSeriesSample, null: NullSpec, kernel,
                          grid, lrcov: LongRunCov | None = None,
                          B: int = 1000, seed=0) -> TestOutcome:
    """Robust wild bootstrap p-value for a simple null over a bandwidth grid.

    The observed statistic is the grid sum of RSS_0 - RSS_alt(b); each
    bootstrap draw replays the Gaussian quadratic form with fresh i.i.d.
    normal vectors.  Deterministic given the seed.
    """
    if B < _MIN_DRAWS:
        raise BadDrawCountError(f"need at least {_MIN_DRAWS} draws, got {B}")
    if null.kind != "simple":
        raise ValueError("wild_bootstrap_pvalue handles simple nulls; "
                         "use wild_bootstrap_component_pvalue for component nulls")
    grid = _as_grid(grid)
    if lrcov is None:
        lrcov = _default_lrcov(sample, kernel, grid)
    observed = averaged_statistic(sample, null, kernel, grid)
    form = GaussianQuadraticForm(sample, kernel, grid, lrcov)
    draws = form.simulate(B, _rng(seed))
    return TestOutcome(
        statistic=observed,
        method="WILD",
        p_value=_empirical_pvalue(draws, observed.value),
        draws=np.sort(draws),
        diagnostics={
            "lrcov_window": lrcov.window,
            "lrcov_smoothing": lrcov.smoothing,
            "lrcov_min_eigenvalue": lrcov.min_eigenvalue,
        },
        seed=seed,
    )


def wild_bootstrap_component_pvalue(sample: TimeSeriesSample, null: NullSpec, kernel,
                                    grid, lrcov: LongRunCov | None = None,
                                    B: int = 1000, seed=0) -> TestOutcome:
    """Wild bootstrap p-value for a component null.

    Draws are differences of two quadratic forms sharing coordinatewise the
    same Gaussian vectors: the full-design form minus the form built from the
    nonparametric block (last p - p1 regressor coordinates, the lower-right
    long-run covariance block).
    """
    if B < _MIN_DRAWS:
        raise BadDrawCountError(f"need at least {_MIN_DRAWS} draws, got {B}")
    if null.kind != "component":
        raise ValueError("component bootstrap requires a component null")
    p1 = null.p1
    if not 1 <= p1 < sample.p:
        raise ValueError(f"component bootstrap needs 1 <= p1 < p, got p1={p1}, p={sample.p}")
    grid = _as_grid(grid)
    if lrcov is None:
        lrcov = _default_lrcov(sample, kernel, grid)
    observed = averaged_statistic(sample, null, kernel, grid)

    sub = sample.regressor_block(p1)
    form_full = GaussianQuadraticForm(sample, kernel, grid, lrcov)
    form_sub = GaussianQuadraticForm(sub, kernel, grid, lrcov.lower_block(p1))
    rng = _rng(seed)
    panels = rng.standard_normal((B, sample.n, sample.p))
    draws = form_full.simulate(B, rng, panels=panels) - form_sub.simulate(
        B, rng, panels=panels[:, :, p1:]
    )
    sigma1_sq = component_variance_diagnostic(sample, kernel, grid.middle, lrcov, p1)
    return TestOutcome(
        statistic=observed,
        method="WILD",
        p_value=_empirical_pvalue(draws, observed.value),
        draws=np.sort(draws),
        diagnostics={
            "lrcov_window": lrcov.window,
            "lrcov_smoothing": lrcov.smoothing,
            "lrcov_min_eigenvalue": lrcov.min_eigenvalue,
            "component_sigma_sq": sigma1_sq,
        },
        seed=seed,
    )


# ---------------------------------------------------------------------------
# plug-in asymptotics


def _plugin_traces(sample: TimeSeriesSample, kernel, b: float, lrcov: LongRunCov):
    """Grid averages of tr(H) and tr(H^2) with H = root M^-1 root.

    M(t_i) is estimated by the order-0 design moment at bandwidth ``b``.
    """
    from .loclin import block_design_matrices

    n, p = sample.n, sample.p
    xx = (sample.x[:, :, None] * sample.x[:, None, :]).reshape(n, p * p)
    from ._sums import apply_stencil

    m_hat = apply_stencil(xx, kernel_stencil(n, b, kernel, 0)).reshape(n, p, p)
    m_inv, _ = stack_inverses(m_hat, sample.time_grid)
    h = np.einsum("nij,njk,nkl->nil", lrcov.sqrt, m_inv, lrcov.sqrt)
    tr_h = float(np.trace(h, axis1=1, axis2=2).mean())
    tr_h2 = float(np.einsum("nij,nji->n", h, h).mean())
    return tr_h, tr_h2


def _warn_if_biased(null: NullSpec):
    if not null.bias_free:
        warnings.warn(
            "asymptotic calibration drops the curvature bias term; prewhiten "
            "the null (or use a zero null) for this to be exact",
            stacklevel=3,
        )


def asym_pvalue_single(sample: TimeSeriesSample, null: NullSpec, kernel, b: float,
                       lrcov: LongRunCov | None = None) -> TestOutcome:
    """Plug-in normal p-value for the single-bandwidth log-ratio statistic.

    Standardizes 2 * statistic by the plug-in mean and variance: the overall
    noise level is RSS_0 / n, the trace functionals are grid averages of
    H = root M^-1 root, and the kernel factor is the squared contrast
    integral.  Upper-tail rejection.
    """
    if null.kind != "simple":
        raise ValueError("asym_pvalue_single requires a simple null")
    _warn_if_biased(null)
    stat = glrt_single(sample, null, kernel, b)
    if lrcov is None:
        fit = local_linear_fit(sample, kernel, b)
        lrcov = longrun_cov(sample, fit.residuals, kernel=kernel)
    v_hat = stat.rss_null_values[0] / sample.n
    tr_h, tr_h2 = _plugin_traces(sample, kernel, b, lrcov)
    sigma_hat = float(np.sqrt(kernel.contrast_l2() * tr_h2))
    contrast0 = kernel.contrast(0.0)
    z = np.sqrt(b) * (2.0 * stat.value + contrast0 * tr_h / (b * v_hat)) * v_hat / sigma_hat
    return TestOutcome(
        statistic=stat,
        method="ASYM",
        p_value=float(norm.sf(z)),
        diagnostics={
            "v_hat": v_hat,
            "avg_trace_h": tr_h,
            "avg_trace_h2": tr_h2,
            "sigma_hat": sigma_hat,
            "z_score": float(z),
        },
    )


def asym_pvalue_averaged(sample: TimeSeriesSample, null: NullSpec, kernel,
                         grid: BandwidthGrid,
                         lrcov: LongRunCov | None = None) -> TestOutcome:
    """Plug-in normal p-value for the bandwidth-averaged statistic.

    The statistic here is the integral over bandwidth scales z in
    [c_min, c_max] of RSS_0 - RSS_alt(z n^-gamma), evaluated by composite
    Simpson quadrature; the grid must carry the rate form.  It is centered
    by n^gamma * contrast(0) * log(c_max/c_min) * avg tr(H) and scaled by
    sqrt(n^gamma) times the averaged-profile variance.  Upper-tail rejection.
    """
    if null.kind != "simple":
        raise ValueError("asym_pvalue_averaged requires a simple null")
    if not isinstance(grid, BandwidthGrid) or not grid.has_rate_form:
        raise NoRateFormError("the averaged asymptotic calibration needs a grid "
                              "with rate form (gamma, c_min, c_max)")
    if not grid.c_min < grid.c_max:
        raise BadRangeError("degenerate rate range: c_min must be below c_max")
    _warn_if_biased(null)

    n = sample.n
    scale = float(n) ** grid.gamma
    nodes = np.linspace(grid.c_min, grid.c_max, _SIMPSON_NODES)
    h = (grid.c_max - grid.c_min) / (_SIMPSON_NODES - 1)
    weights = np.full(_SIMPSON_NODES, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    weights *= h / 3.0

    rss0 = rss_null(sample, null, kernel, nodes[0] / scale)
    rss_alt = tuple(
        local_linear_fit(sample, kernel, c / scale).rss for c in nodes
    )
    value = float(np.dot(weights, rss0 - np.asarray(rss_alt)))
    stat = StatisticValue(
        kind="averaged_rss",
        value=value,
        bandwidths=tuple(c / scale for c in nodes),
        rss_null_values=(rss0,) * _SIMPSON_NODES,
        rss_alt_values=rss_alt,
        n=n,
        weights=tuple(weights),
    )

    if lrcov is None:
        lrcov = _default_lrcov(sample, kernel, _as_grid(grid))
    tr_h, tr_h2 = _plugin_traces(sample, kernel, grid.middle, lrcov)
    sigma_star = float(np.sqrt(
        averaged_contrast_l2(kernel, grid.c_min, grid.c_max) * tr_h2
    ))
    center = scale * kernel.contrast(0.0) * np.log(grid.c_max / grid.c_min) * tr_h
    z = (value + center) / (np.sqrt(scale) * sigma_star)
    return TestOutcome(
        statistic=stat,
        method="ASYM",
        p_value=float(norm.sf(z)),
        diagnostics={
            "avg_trace_h": tr_h,
            "avg_trace_h2": tr_h2,
            "sigma_star": sigma_star,
            "z_score": float(z),
            "gamma": grid.gamma,
            "c_min": grid.c_min,
            "c_max": grid.c_max,
        },
    )


def component_variance_diagnostic(sample: TimeSeriesSample, kernel, b: float,
                                  lrcov: LongRunCov, p1: int) -> float:
    """Plug-in variance of the component statistic (diagnostic only).

    Computes the squared contrast integral times the grid average of
    tr[(H - H_2)^2], where H_2 carries the nonparametric block.
    """
    from ._sums import apply_stencil

    n, p = sample.n, sample.p
    xx = (sample.x[:, :, None] * sample.x[:, None, :]).reshape(n, p * p)
    m_hat = apply_stencil(xx, kernel_stencil(n, b, kernel, 0)).reshape(n, p, p)
    m_inv, _ = stack_inverses(m_hat, sample.time_grid)
    h = np.einsum("nij,njk,nkl->nil", lrcov.sqrt, m_inv, lrcov.sqrt)

    sub_lr = lrcov.lower_block(p1)
    m22_inv, _ = stack_inverses(m_hat[:, p1:, p1:], sample.time_grid)
    h22 = np.einsum("nij,njk,nkl->nil", sub_lr.sqrt, m22_inv, sub_lr.sqrt)
    h2 = np.zeros_like(h)
    h2[:, p1:, p1:] = h22
    diff = h - h2
    tr = float(np.einsum("nij,nji->n", diff, diff).mean())
    return kernel.contrast_l2() * tr


# ---------------------------------------------------------------------------
# iid residual bootstrap (baseline)


def iid_residual_bootstrap_pvalue(sample: TimeSeriesSample, null: NullSpec, kernel,
                                  grid_or_b, B: int = 1000, seed=0) -> TestOutcome:
    """Classic residual bootstrap: i.i.d. resampling of centered residuals.

    Residuals come from the alternative fit (middle grid bandwidth for
    grids); each draw adds resampled residuals to the null fitted values and
    recomputes the statistic.  Consistent only for i.i.d. exogenous errors;
    kept as the baseline whose failure under dependence, non-stationarity or
    endogeneity the robust bootstrap repairs.
    """
    if B < _MIN_DRAWS:
        raise BadDrawCountError(f"need at least {_MIN_DRAWS} draws, got {B}")
    if null.kind != "simple":
        raise ValueError("the iid residual bootstrap supports simple nulls only")
    single = np.isscalar(grid_or_b)
    grid = _as_grid(grid_or_b)

    if single:
        observed = glrt_single(sample, null, kernel, grid.values[0])
    else:
        observed = averaged_statistic(sample, null, kernel, grid)

    fit = local_linear_fit(sample, kernel, grid.middle)
    centered = fit.residuals - fit.residuals.mean()
    null_fitted = null.null_fitted(sample)

    rng = _rng(seed)
    n = sample.n
    idx = rng.integers(0, n, size=(B, n))
    eps_star = centered[idx]  # (B, n)
    rss0_star = np.einsum("bn,bn->b", eps_star, eps_star)
    ystar = (null_fitted[None, :] + eps_star).T  # (n, B)

    rss_alt_star = np.empty((len(grid.values), B))
    for j, b in enumerate(grid.values):
        rss_alt_star[j] = fit_rss_batch(sample, ystar, kernel, b)

    if single:
        ratio = np.where(rss_alt_star[0] > 0.0, rss0_star / rss_alt_star[0], np.inf)
        draws = 0.5 * n * np.log(ratio)
    else:
        draws = (rss0_star[None, :] - rss_alt_star).sum(axis=0)

    return TestOutcome(
        statistic=observed,
        method="IID",
        p_value=_empirical_pvalue(draws, observed.value),
        draws=np.sort(draws),
        diagnostics={"residual_bandwidth": grid.middle},
        seed=seed,
    )
