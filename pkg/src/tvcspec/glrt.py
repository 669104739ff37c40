"""Likelihood-ratio type statistics for coefficient specification tests.

Two families are provided.  The log-ratio statistics compare residual sums of
squares under the null and the nonparametric alternative at one bandwidth,

    (n/2) log(RSS_null / RSS_alt),

while the averaged statistics sum the plain RSS differences over a bandwidth
grid, which removes the sensitivity of the single-bandwidth test to the
smoothing choice.  Each statistic carries a ledger of the RSS values it was
assembled from, so the value can be reproduced exactly from the record.

Parametric nulls are handled by prewhitening: fit the parametric part by
least squares, subtract it from the response, and test the transformed
sample against the simple zero null.  The transformed null has no curvature,
so the asymptotic calibrations can drop their bias terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import BandwidthGrid, TimeSeriesSample
from .errors import FamilyFitError, ZeroResidualError
from .loclin import NullSpec, ParametricFamily, local_linear_fit, rss_null

__all__ = [
    "StatisticValue",
    "glrt_single",
    "glrt_component",
    "averaged_statistic",
    "prewhiten",
]


@dataclass(frozen=True)
class StatisticValue:
    """A computed test statistic together with its RSS ledger.

    ``kind`` is one of ``single_log``, ``component_log``, ``averaged_rss``,
    ``averaged_component``.  ``rss_null_values`` holds RSS under the null
    (one entry per bandwidth for component nulls, a single repeated entry for
    simple ones) and ``rss_alt_values`` the alternative RSS per bandwidth.
    ``reconstruct()`` recomputes the value from the ledger.
    """

    kind: str
    value: float
    bandwidths: tuple
    rss_null_values: tuple
    rss_alt_values: tuple
    n: int
    weights: tuple | None = None  # quadrature weights; None means a plain sum

    def reconstruct(self) -> float:
        if self.kind in ("single_log", "component_log"):
            return 0.5 * self.n * math.log(self.rss_null_values[0] / self.rss_alt_values[0])
        if self.weights is not None:
            return float(np.dot(
                np.asarray(self.weights),
                np.asarray(self.rss_null_values) - np.asarray(self.rss_alt_values),
            ))
        total = 0.0
        for r0, ra in zip(self.rss_null_values, self.rss_alt_values):
            total += r0 - ra
        return total


def _log_ratio(sample, rss0: float, rss_a: float, kind: str, b: float) -> StatisticValue:
    if rss_a <= 0.0:
        raise ZeroResidualError(
            "alternative fit has zero RSS; the log-ratio statistic is undefined"
        )
    value = 0.5 * sample.n * math.log(rss0 / rss_a)
    return StatisticValue(
        kind=kind,
        value=value,
        bandwidths=(float(b),),
        rss_null_values=(rss0,),
        rss_alt_values=(rss_a,),
        n=sample.n,
    )


def glrt_single(sample: TimeSeriesSample, null: NullSpec, kernel, b: float) -> StatisticValue:
    """Log-ratio statistic (n/2) log(RSS_0 / RSS_alt) for a simple null."""
    if null.kind != "simple":
        raise ValueError("glrt_single requires a simple null")
    rss0 = rss_null(sample, null, kernel, b)
    rss_a = local_linear_fit(sample, kernel, b).rss
    return _log_ratio(sample, rss0, rss_a, "single_log", b)


def glrt_component(sample: TimeSeriesSample, null: NullSpec, kernel, b: float) -> StatisticValue:
    """Log-ratio statistic (n/2) log(RSS_1 / RSS_alt) for a component null.

    The null-side RSS comes from the local linear regression of the adjusted
    response on the remaining regressors with the same bandwidth.
    """
    if null.kind != "component":
        raise ValueError("glrt_component requires a component null")
    rss1 = rss_null(sample, null, kernel, b)
    rss_a = local_linear_fit(sample, kernel, b).rss
    return _log_ratio(sample, rss1, rss_a, "component_log", b)


def averaged_statistic(sample: TimeSeriesSample, null: NullSpec, kernel,
                       grid: BandwidthGrid) -> StatisticValue:
    """Grid-averaged statistic: sum over bandwidths of RSS_null - RSS_alt.

    Simple nulls share one RSS_0; component nulls recompute RSS_1 at every
    bandwidth (the null-side fit always uses the same bandwidth as the
    alternative fit).
    """
    if isinstance(grid, (int, float)):
        grid = BandwidthGrid.single(float(grid))
    if null.kind == "parametric":
        raise ValueError("prewhiten parametric nulls before forming the statistic")
    component = null.kind == "component"

    nulls, alts = [], []
    for b in grid.values:
        try:
            if component:
                nulls.append(rss_null(sample, null, kernel, b))
            alts.append(local_linear_fit(sample, kernel, b).rss)
        except Exception as err:
            err.args = (f"{err} (at bandwidth b={b})",)
            raise
    if not component:
        rss0 = rss_null(sample, null, kernel, grid.values[0])
        nulls = [rss0] * len(grid.values)

    total = 0.0
    for r0, ra in zip(nulls, alts):
        total += r0 - ra
    return StatisticValue(
        kind="averaged_component" if component else "averaged_rss",
        value=total,
        bandwidths=tuple(grid.values),
        rss_null_values=tuple(nulls),
        rss_alt_values=tuple(alts),
        n=sample.n,
    )


def prewhiten(sample: TimeSeriesSample, family) -> tuple[TimeSeriesSample, np.ndarray]:
    """Remove a fitted parametric coefficient curve from the response.

    ``family`` may be a :class:`ParametricFamily` or a parametric
    :class:`NullSpec`.  Returns the transformed sample (test it against
    ``NullSpec.zero()``) and the least-squares parameter estimate.  Raises
    :class:`FamilyFitError` when the parametric design is rank deficient.
    """
    if isinstance(family, NullSpec):
        if family.kind != "parametric" or family.family is None:
            raise ValueError("prewhiten expects a parametric null")
        family = family.family
    if not isinstance(family, ParametricFamily):
        raise TypeError("family must be a ParametricFamily or parametric NullSpec")

    design = np.asarray(family.design(sample), dtype=float)
    if design.ndim != 2 or design.shape[0] != sample.n:
        raise FamilyFitError(f"family design has invalid shape {design.shape}")
    q = design.shape[1]
    if q == 0:
        return sample, np.empty(0)
    theta, _, rank, _ = np.linalg.lstsq(design, sample.y, rcond=None)
    if rank < q:
        raise FamilyFitError(
            f"parametric family {family.name!r} has rank {rank} < {q} parameters"
        )
    return sample.with_response(sample.y - design @ theta), theta
