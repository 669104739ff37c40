"""Simulators for locally stationary regression samples.

Four built-in Monte Carlo scenarios cover the forces that break the pivotal
behaviour of the likelihood-ratio test: (A) an i.i.d. benchmark, (B)
endogeneity, (C) non-stationarity, (D) temporal dependence.  All use the
two-regressor design (intercept plus one covariate) with y_i = eps_i under
the null of zero coefficients.

A composable :class:`DgpSpec` generates general pairs (x_i, eps_i) from two
independent innovation streams through user filters, with
eps_i = shape(t_i, error innovations) * volatility(t_i, regressor innovations).

Randomness uses counter-based Philox streams split per innovation sequence,
so parallel replication is reproducible regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.signal import lfilter

from .data import TimeSeriesSample
from .errors import BadSizeError

__all__ = ["Scenario", "DgpSpec", "simulate_scenario", "simulate_custom"]

# |0.5|^200 is far below machine precision, so the AR(1) start is forgotten
_AR_BURN_IN = 200


class Scenario(Enum):
    """The four built-in simulation scenarios."""

    A = "A"  # x2 iid exponential(1), eps iid N(0,1), independent
    B = "B"  # eps_i = x_{2i} * zeta_i: errors driven by the regressor
    C = "C"  # t-distributed x2 with drifting df, variance decaying in t
    D = "D"  # x_{2i} = e_i e_{i-1}, eps AR(1) with coefficient 0.5

    @classmethod
    def parse(cls, label) -> "Scenario":
        if isinstance(label, cls):
            return label
        return cls(str(label).strip().upper())


def _streams(seed, count: int):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in ss.spawn(count)]


def simulate_scenario(scenario, n: int, seed) -> TimeSeriesSample:
    """Draw one null sample (beta identically zero, y_i = eps_i) of size n.

    The design is p = 2 with an intercept column and one covariate:

    * A: covariate iid exponential mean 1, errors iid standard normal,
      mutually independent.
    * B: covariate as in A, errors x_{2i} * zeta_i (endogenous).
    * C: covariate Student-t with 5 + 10 t_i degrees of freedom (raw,
      unscaled), errors exp(-1/t_i) / (100 t_i^4) * zeta_i.  The variance
      factor underflows harmlessly to zero near t = 0; no special-casing.
    * D: covariate e_i * e_{i-1} from one iid normal stream, errors AR(1)
      with coefficient 0.5 driven by an independent stream, burned in for
      200 steps.

    Deterministic given (scenario, n, seed).
    """
    scenario = Scenario.parse(scenario)
    if n < 20:
        raise BadSizeError(f"need n >= 20, got {n}")
    rng_x, rng_e = _streams(seed, 2)
    t = np.arange(1, n + 1, dtype=float) / n

    if scenario is Scenario.A:
        x2 = rng_x.exponential(1.0, size=n)
        eps = rng_e.standard_normal(n)
    elif scenario is Scenario.B:
        x2 = rng_x.exponential(1.0, size=n)
        eps = x2 * rng_e.standard_normal(n)
    elif scenario is Scenario.C:
        x2 = rng_x.standard_t(5.0 + 10.0 * t)
        with np.errstate(under="ignore"):
            scale = np.exp(-1.0 / t) / (100.0 * t**4)
        eps = scale * rng_e.standard_normal(n)
    else:  # Scenario.D
        e = rng_x.standard_normal(n + 1)
        x2 = e[1:] * e[:-1]
        zeta = rng_e.standard_normal(n + _AR_BURN_IN)
        eps = lfilter([1.0], [1.0, -0.5], zeta)[_AR_BURN_IN:]

    x = np.column_stack([np.ones(n), x2])
    return TimeSeriesSample(x, eps.copy())


@dataclass(frozen=True)
class DgpSpec:
    """Recipe for a general locally stationary pair (x_i, eps_i).

    ``regressor_filter(t, hist)`` maps rescaled time and the regressor
    innovation history (oldest first, current last) to the regressor vector;
    ``volatility(t, hist)`` uses the same history for the error scale, which
    is what makes endogeneity expressible; ``shape(t, hist)`` maps the
    independent error-innovation history to a mean-zero variance-one shape
    variable.  Innovations are iid standard normal.  ``burn_in`` extra past
    innovations are prepended for recursive filters.
    """

    p: int
    regressor_filter: Callable[[float, np.ndarray], np.ndarray]
    volatility: Callable[[float, np.ndarray], float]
    shape: Callable[[float, np.ndarray], float]
    beta: Callable[[float], np.ndarray] | None = None
    burn_in: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("regressor dimension p must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


def simulate_custom(spec: DgpSpec, n: int, seed) -> TimeSeriesSample:
    """Generate a sample from a :class:`DgpSpec`; deterministic given seed."""
    if n < 20:
        raise BadSizeError(f"need n >= 20, got {n}")
    rng_x, rng_e = _streams(seed, 2)
    innov_x = rng_x.standard_normal(spec.burn_in + n)
    innov_e = rng_e.standard_normal(spec.burn_in + n)

    x = np.empty((n, spec.p))
    eps = np.empty(n)
    for i in range(n):
        t = (i + 1) / n
        hist_x = innov_x[: spec.burn_in + i + 1]
        hist_e = innov_e[: spec.burn_in + i + 1]
        x[i] = np.asarray(spec.regressor_filter(t, hist_x), dtype=float)
        eps[i] = float(spec.shape(t, hist_e)) * float(spec.volatility(t, hist_x))

    if spec.beta is None:
        y = eps
    else:
        t_grid = np.arange(1, n + 1, dtype=float) / n
        btrue = np.array([np.asarray(spec.beta(t), dtype=float) for t in t_grid])
        y = np.einsum("ij,ij->i", x, btrue) + eps
    return TimeSeriesSample(x, y)
