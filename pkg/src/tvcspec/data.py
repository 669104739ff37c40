"""Data model: regression samples on the implicit time grid and bandwidth grids."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadRangeError

__all__ = ["TimeSeriesSample", "BandwidthGrid"]


@dataclass(frozen=True)
class TimeSeriesSample:
    """A regression sample y_i = x_i' beta(t_i) + eps_i on the grid t_i = i/n.

    ``x`` is the n-by-p regressor matrix (row i is x_i'), ``y`` the length-n
    response.  The time grid is implicit: t_i = i/n, strictly increasing in
    (0, 1].  Arrays are made read-only; instances can be shared freely.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("need n >= 1 observations and p >= 1 regressors")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample contains non-finite entries")
        x = np.ascontiguousarray(x)
        y = np.ascontiguousarray(y)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def time_grid(self) -> np.ndarray:
        """The implicit grid t_i = i/n, i = 1..n."""
        n = self.n
        t = np.arange(1, n + 1, dtype=float) / n
        t.setflags(write=False)
        return t

    def with_response(self, y: np.ndarray) -> "TimeSeriesSample":
        """Same regressors, new response (used by prewhitening and bootstraps)."""
        return TimeSeriesSample(self.x, y)

    def regressor_block(self, start: int, stop: int | None = None) -> "TimeSeriesSample":
        """Sub-sample keeping regressor columns ``start:stop`` (same response)."""
        return TimeSeriesSample(self.x[:, start:stop], self.y)


@dataclass(frozen=True)
class BandwidthGrid:
    """Strictly increasing bandwidths, optionally carrying a rate form.

    The rate form records bandwidths as b = c * n^(-gamma) with
    c in [c_min, c_max]; it is required by the asymptotic calibration of the
    averaged test.  Values outside (0, 1/2) and rate exponents outside
    [2/9, 1/4) are accepted with a warning rather than rejected, since the
    published size study itself uses 1.5 * 0.35 = 0.525.
    """

    values: tuple
    gamma: float | None = None
    c_min: float | None = None
    c_max: float | None = None

    def __post_init__(self):
        vals = tuple(float(b) for b in self.values)
        if len(vals) < 1:
            raise BadRangeError("bandwidth grid must contain at least one value")
        if any(not 0.0 < b < 1.0 for b in vals):
            raise BadRangeError(f"bandwidths must lie in (0, 1), got {vals}")
        if any(b2 <= b1 for b1, b2 in zip(vals[:-1], vals[1:])):
            raise BadRangeError(f"bandwidths must be strictly increasing, got {vals}")
        if any(b >= 0.5 for b in vals):
            warnings.warn(
                f"bandwidth grid {vals} leaves the recommended range (0, 1/2)",
                stacklevel=2,
            )
        object.__setattr__(self, "values", vals)
        rate = (self.gamma, self.c_min, self.c_max)
        if any(r is not None for r in rate):
            if any(r is None for r in rate):
                raise BadRangeError("rate form needs all of gamma, c_min, c_max")
            if not 0.0 < self.c_min < self.c_max:
                raise BadRangeError(
                    f"rate form needs 0 < c_min < c_max, got ({self.c_min}, {self.c_max})"
                )
            if not (2.0 / 9.0 <= self.gamma < 0.25):
                warnings.warn(
                    f"rate exponent gamma={self.gamma} outside [2/9, 1/4); the "
                    "averaged-test asymptotics are not guaranteed",
                    stacklevel=2,
                )

    @classmethod
    def single(cls, b: float) -> "BandwidthGrid":
        return cls(values=(b,))

    @classmethod
    def from_anchor(
        cls,
        b_anchor: float,
        n: int | None = None,
        multipliers=(1.0 / 1.5, 1.0, 1.5),
        gamma: float = 2.0 / 9.0,
    ) -> "BandwidthGrid":
        """Grid b_anchor * multipliers, the recommended {b/1.5, b, 1.5 b}.

        When ``n`` is given the rate form is filled in with c = b * n^gamma,
        enabling the asymptotic calibration of the averaged statistic.
        """
        mults = tuple(sorted(float(m) for m in multipliers))
        if len(mults) == 0 or mults[0] <= 0:
            raise BadRangeError("multipliers must be positive")
        values = tuple(b_anchor * m for m in mults)
        if n is None or len(values) < 2:
            return cls(values=values)
        scale = float(n) ** gamma
        return cls(
            values=values,
            gamma=gamma,
            c_min=values[0] * scale,
            c_max=values[-1] * scale,
        )

    @property
    def has_rate_form(self) -> bool:
        return self.gamma is not None

    @property
    def middle(self) -> float:
        """The middle grid bandwidth (lower middle for even lengths)."""
        return self.values[(len(self.values) - 1) // 2]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)
