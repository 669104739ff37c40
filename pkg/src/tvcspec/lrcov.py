"""Local lag-window estimation of the long-run covariance matrix.

The long-run covariance of the products x_i * eps_i at rescaled time t drives
the variance of the local estimators and hence the calibration of the tests.
It is estimated by kernel-smoothing, in time, the rank-one outer products of
centered block sums

    Delta_i = B_i B_i' / (2m + 1),   B_i = sum_{j=-m}^{m} L_{clip(i+j)}

with L_i = x_i * resid_i.  Out-of-range block indices are clamped to the
sample edge, which keeps every Delta_i an outer product and therefore the
smoothed estimate positive semidefinite by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._sums import apply_stencil
from .data import TimeSeriesSample
from .errors import BadWindowError, EmptyWeightError, NotSymmetricError

__all__ = ["LongRunCov", "longrun_cov", "psd_sqrt", "default_window", "default_smoothing"]


def default_window(n: int) -> int:
    """Block window m = floor(n^(2/7)), the rate-optimal choice with unit constant."""
    return int(np.floor(n ** (2.0 / 7.0)))


def default_smoothing(n: int) -> float:
    """Time-smoothing bandwidth tau = n^(-1/7) with unit constant."""
    return float(n ** (-1.0 / 7.0))


@dataclass(frozen=True)
class LongRunCov:
    """Long-run covariance estimate on the sample grid with its PSD roots.

    ``values[i]`` is the symmetric PSD estimate at t_i; ``sqrt[i]`` its
    symmetric PSD square root (negative eigenvalues clamped to zero before
    taking roots).  ``min_eigenvalue`` records the smallest eigenvalue seen
    before clamping.
    """

    values: np.ndarray
    sqrt: np.ndarray
    window: int
    smoothing: float
    min_eigenvalue: float = field(default=0.0)

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def at_midpoint(self) -> np.ndarray:
        return self.values[self.values.shape[0] // 2]

    def lower_block(self, p1: int) -> "LongRunCov":
        """The estimate restricted to the last p - p1 coordinates."""
        block = self.values[:, p1:, p1:]
        roots, min_eig = _psd_sqrt_stack(block)
        return LongRunCov(block, roots, self.window, self.smoothing, min_eig)


def longrun_cov(sample: TimeSeriesSample, residuals, m: int | None = None,
                tau: float | None = None, kernel=None,
                boundary: str = "clip") -> LongRunCov:
    """Local lag-window estimate of the long-run covariance of x_i * resid_i.

    ``residuals`` should come from the nonparametric alternative fit.  The
    defaults are m = floor(n^(2/7)) and tau = n^(-1/7); the weights at each
    grid point are the kernel values K((t_j - t)/tau) normalized to sum to
    one.  ``boundary`` controls the block sums at the sample edges: ``clip``
    repeats the edge products, ``truncate`` drops out-of-range terms; both
    keep the 1/(2m+1) divisor and the rank-one PSD structure.
    """
    from .kernels import get_kernel

    kernel = kernel if kernel is not None else get_kernel("epanechnikov")
    n, p = sample.n, sample.p
    m = default_window(n) if m is None else int(m)
    tau = default_smoothing(n) if tau is None else float(tau)
    if m < 0:
        raise BadWindowError(f"window must be >= 0, got {m}")
    if 2 * m + 1 > n:
        raise BadWindowError(f"window 2m+1 = {2 * m + 1} exceeds sample size {n}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"smoothing bandwidth must lie in (0, 1), got {tau}")
    if boundary not in ("clip", "truncate"):
        raise ValueError("boundary must be 'clip' or 'truncate'")

    resid = np.asarray(residuals, dtype=float).ravel()
    if resid.shape[0] != n:
        raise ValueError("residual vector length does not match the sample")

    products = sample.x * resid[:, None]
    idx = np.arange(n)
    block = np.zeros((n, p))
    for off in range(-m, m + 1):
        if boundary == "clip":
            block += products[np.clip(idx + off, 0, n - 1)]
        else:
            inside = (idx + off >= 0) & (idx + off < n)
            block[inside] += products[idx[inside] + off]
    outers = (block[:, :, None] * block[:, None, :]) / (2 * m + 1)

    # normalized kernel-in-time weights; both sums share the Toeplitz stencil
    ntau = n * tau
    w = min(n - 1, int(np.ceil(ntau)))
    stencil = kernel(np.arange(-w, w + 1, dtype=float) / ntau)
    weight_sums = apply_stencil(np.ones(n), stencil)
    if np.any(weight_sums <= 0.0):
        i = int(np.argmax(weight_sums <= 0.0))
        raise EmptyWeightError(f"zero total kernel weight at t={(i + 1) / n:.6g}")
    smoothed = apply_stencil(outers.reshape(n, p * p), stencil)
    values = smoothed.reshape(n, p, p) / weight_sums[:, None, None]
    values = 0.5 * (values + np.swapaxes(values, 1, 2))

    roots, min_eig = _psd_sqrt_stack(values)
    return LongRunCov(values, roots, m, tau, min_eig)


def _psd_sqrt_stack(mats: np.ndarray):
    eigval, eigvec = np.linalg.eigh(mats)
    min_eig = float(eigval.min())
    clipped = np.sqrt(np.clip(eigval, 0.0, None))
    roots = np.einsum("nij,nj,nkj->nik", eigvec, clipped, eigvec)
    return roots, min_eig


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root of a symmetric matrix.

    Negative eigenvalues are clamped to zero, so the result B satisfies
    B @ B = clamp(A).  Raises :class:`NotSymmetricError` when the input is
    asymmetric beyond 1e-8.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > 1e-8:
        raise NotSymmetricError("matrix is not symmetric within 1e-8")
    sym = 0.5 * (a + a.T)
    eigval, eigvec = np.linalg.eigh(sym)
    return (eigvec * np.sqrt(np.clip(eigval, 0.0, None))) @ eigvec.T
