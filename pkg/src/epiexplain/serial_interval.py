"""Gamma serial-interval distribution and its daily discretization.

The CDF is the regularized lower incomplete gamma function, evaluated with
the power series below ``x < shape + 1`` and the Lentz continued fraction
above it (Numerical Recipes, ch. 6.2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterDomainError

DEFAULT_MEAN = 7.0
DEFAULT_SD = 4.5
DEFAULT_HORIZON = 100

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 10_000


@dataclass(frozen=True)
class GammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ParameterDomainError(
                f"gamma shape and scale must be positive, got {self.shape}, {self.scale}"
            )

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2

    def pdf(self, x: float) -> float:
        if x < 0:
            return 0.0
        if x == 0:
            if self.shape < 1:
                return math.inf
            return 1.0 / self.scale if self.shape == 1 else 0.0
        log_p = (
            (self.shape - 1) * math.log(x)
            - x / self.scale
            - math.lgamma(self.shape)
            - self.shape * math.log(self.scale)
        )
        return math.exp(log_p)


@dataclass(frozen=True)
class DiscretizedSerialInterval:
    """Daily weights ``g_1..g_S``; ``weights[0]`` is the mass at a lag of one day."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) < 1:
            raise ParameterDomainError("serial interval needs at least one weight")
        if any(w < 0 for w in self.weights):
            raise ParameterDomainError("serial interval weights must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def weight(self, lag: int) -> float:
        """Mass at ``lag`` days; zero outside ``1..horizon``."""
        if 1 <= lag <= len(self.weights):
            return self.weights[lag - 1]
        return 0.0

    def total_mass(self) -> float:
        return math.fsum(self.weights)


def gamma_from_mean_sd(mean: float, sd: float) -> GammaParams:
    """Moment-matched Gamma: shape = mean^2/sd^2, scale = sd^2/mean."""
    if not (mean > 0 and sd > 0):
        raise ParameterDomainError(f"mean and sd must be positive, got {mean}, {sd}")
    return GammaParams(shape=mean**2 / sd**2, scale=sd**2 / mean)


def _lower_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:  # pragma: no cover - unreachable for x < a + 1
        raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_continued_fraction(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:  # pragma: no cover
        raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_lower_gamma(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a)."""
    if a <= 0:
        raise ParameterDomainError(f"a must be positive, got {a}")
    if x < 0:
        raise ParameterDomainError(f"x must be non-negative, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _lower_series(a, x))
    return max(0.0, 1.0 - _upper_continued_fraction(a, x))


def gamma_cdf(params: GammaParams, x: float) -> float:
    if x < 0:
        raise ParameterDomainError(f"gamma_cdf needs x >= 0, got {x}")
    return regularized_lower_gamma(params.shape, x / params.scale)


def discretize(params: GammaParams, horizon: int = DEFAULT_HORIZON) -> DiscretizedSerialInterval:
    """Integrate the density over daily buckets.

    The first bucket covers ``[0, 1.5]``; bucket ``s >= 2`` covers ``[s - 0.5, s + 0.5]``.
    """
    if int(horizon) != horizon or horizon < 1:
        raise ParameterDomainError(f"horizon must be a positive integer, got {horizon}")
    edges = [gamma_cdf(params, s + 0.5) for s in range(1, int(horizon) + 1)]
    weights = [edges[0]]
    weights.extend(max(0.0, hi - lo) for lo, hi in zip(edges, edges[1:]))
    return DiscretizedSerialInterval(tuple(weights))


def serial_interval(
    mean: float = DEFAULT_MEAN, sd: float = DEFAULT_SD, horizon: int = DEFAULT_HORIZON
) -> DiscretizedSerialInterval:
    return discretize(gamma_from_mean_sd(mean, sd), horizon)
