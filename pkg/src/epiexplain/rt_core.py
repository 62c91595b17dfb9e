"""Daily new cases, smoothing, renewal-equation R_t estimation and forward simulation."""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DataIntegrityError, ParameterDomainError
from .serial_interval import DiscretizedSerialInterval

log = logging.getLogger(__name__)

DEFAULT_MIN_CUMULATIVE = 20
DEFAULT_RADIUS = 1
DENOMINATOR_FLOOR = 1e-12
SIMULATION_START = dt.date(2020, 1, 22)


def _check_consecutive(region, dates):
    for prev, cur in zip(dates, dates[1:]):
        if (cur - prev).days != 1:
            raise DataIntegrityError(
                f"{region}: dates must be consecutive days, found {prev} followed by {cur}"
            )


@dataclass(frozen=True)
class CaseSeries:
    region: str
    dates: tuple[dt.date, ...]
    cumulative: tuple[int, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.cumulative):
            raise DataIntegrityError(f"{self.region}: dates and counts differ in length")
        _check_consecutive(self.region, self.dates)
        for d, c in zip(self.dates, self.cumulative):
            if c < 0:
                raise DataIntegrityError(f"{self.region}: negative cumulative count on {d}")

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class NewCaseSeries:
    """Daily new cases. ``cumulative`` keeps the raw confirmed totals when known,
    since the inclusion rule is applied to unsmoothed counts."""

    region: str
    dates: tuple[dt.date, ...]
    values: np.ndarray
    cumulative: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if len(values) != len(self.dates):
            raise DataIntegrityError(f"{self.region}: dates and values differ in length")
        if self.cumulative is not None:
            object.__setattr__(self, "cumulative", np.asarray(self.cumulative, dtype=np.int64))

    def __len__(self):
        return len(self.dates)

    def cumulative_counts(self) -> np.ndarray:
        if self.cumulative is not None:
            return self.cumulative
        return np.cumsum(self.values)


@dataclass(frozen=True)
class RtSeries:
    region: str
    dates: tuple[dt.date, ...]
    rt: np.ndarray
    cumulative: np.ndarray

    def __len__(self):
        return len(self.dates)

    def items(self):
        return zip(self.dates, self.rt.tolist(), self.cumulative.tolist())


def new_cases_from_cumulative(series: CaseSeries, clamp_negative: bool = False) -> NewCaseSeries:
    """First differences; day one's new cases equal its cumulative count.

    A decrease in the cumulative count raises ``DataIntegrityError`` unless
    ``clamp_negative`` is set, in which case the difference is clamped to 0 and logged.
    """
    cum = np.asarray(series.cumulative, dtype=np.int64)
    new = np.diff(cum, prepend=0)
    bad = np.flatnonzero(new < 0)
    if bad.size:
        if not clamp_negative:
            d = series.dates[bad[0]]
            raise DataIntegrityError(
                f"{series.region}: cumulative count decreases on {d.isoformat()} "
                f"({cum[bad[0] - 1]} -> {cum[bad[0]]})"
            )
        for i in bad:
            log.warning("%s: clamped negative new cases on %s", series.region, series.dates[i])
        new = np.maximum(new, 0)
    return NewCaseSeries(series.region, series.dates, new.astype(float), cum)


def mean_filter(series: NewCaseSeries, radius: int = DEFAULT_RADIUS) -> NewCaseSeries:
    """Centered moving average; the window shrinks at the series ends."""
    if radius < 0:
        raise ParameterDomainError(f"radius must be non-negative, got {radius}")
    x = series.values
    n = len(x)
    if radius == 0 or n == 0:
        return NewCaseSeries(series.region, series.dates, x.copy(), series.cumulative)
    idx = np.arange(n)
    lo = np.maximum(idx - radius, 0)
    hi = np.minimum(idx + radius, n - 1) + 1
    out = np.empty(n)
    for i, (a, b) in enumerate(zip(lo, hi)):
        w = x[a:b]
        # constant windows return their value exactly; sum/len can be off by an ulp
        out[i] = w[0] if w.min() == w.max() else w.sum() / (b - a)
    return NewCaseSeries(series.region, series.dates, out, series.cumulative)


def renewal_denominators(values: np.ndarray, si: DiscretizedSerialInterval) -> np.ndarray:
    """``sum_{tau<t} c_tau * g_{t-tau}`` for every t; lags beyond the horizon add nothing."""
    values = np.asarray(values, dtype=float)
    g = si.as_array()
    n = len(values)
    out = np.zeros(n)
    for t in range(1, n):
        lags = min(t, len(g))
        # c_{t-1}, ..., c_{t-lags} paired with g_1, ..., g_lags
        out[t] = np.dot(values[t - lags : t][::-1], g[:lags])
    return out


def estimate_rt(
    new_cases: NewCaseSeries,
    si: DiscretizedSerialInterval,
    min_cumulative: int = DEFAULT_MIN_CUMULATIVE,
) -> RtSeries:
    """R_t = c_t / sum_{tau<t} c_tau g_{t-tau}, on days whose raw cumulative count
    is at least ``min_cumulative`` and whose denominator is positive."""
    if min_cumulative < 0:
        raise ParameterDomainError(f"min_cumulative must be >= 0, got {min_cumulative}")
    c = new_cases.values
    cum = new_cases.cumulative_counts()
    denom = renewal_denominators(c, si)
    dates, rts, cums = [], [], []
    for t in range(len(c)):
        if cum[t] < min_cumulative:
            continue
        if denom[t] < DENOMINATOR_FLOOR:
            log.info("%s: zero renewal denominator on %s, day omitted",
                     new_cases.region, new_cases.dates[t])
            continue
        dates.append(new_cases.dates[t])
        rts.append(c[t] / denom[t])
        cums.append(cum[t])
    return RtSeries(
        new_cases.region,
        tuple(dates),
        np.asarray(rts, dtype=float),
        np.asarray(cums, dtype=np.int64 if new_cases.cumulative is not None else float),
    )


def simulate_cases(
    r_trajectory,
    si: DiscretizedSerialInterval,
    seed_cases,
    start: dt.date = SIMULATION_START,
    region: str = "simulated",
) -> NewCaseSeries:
    """Deterministic forward renewal: the seed days are copied, then
    ``c_t = R_t * sum_{tau<t} c_tau g_{t-tau}`` for each entry of ``r_trajectory``."""
    seed = [float(s) for s in seed_cases]
    if not seed:
        raise ParameterDomainError("simulate_cases needs at least one seed day")
    if any(s <= 0 for s in seed):
        raise ParameterDomainError("seed cases must be positive")
    r = [float(v) for v in r_trajectory]
    if any(v < 0 for v in r):
        raise ParameterDomainError("reproduction numbers must be non-negative")
    g = si.as_array()
    c = np.zeros(len(seed) + len(r))
    c[: len(seed)] = seed
    for j, rt in enumerate(r):
        t = len(seed) + j
        lags = min(t, len(g))
        c[t] = rt * np.dot(c[t - lags : t][::-1], g[:lags])
    dates = tuple(start + dt.timedelta(days=i) for i in range(len(c)))
    return NewCaseSeries(region, dates, c)
