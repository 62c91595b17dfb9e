"""Region-day feature rows: days since each control measure, weather, and category codes."""

from __future__ import annotations

import bisect
import datetime as dt
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParameterDomainError
from .rt_core import NewCaseSeries, RtSeries

log = logging.getLogger(__name__)

MEASURES = ("GA", "MU", "SC", "CL", "MT", "ITB", "CT")
FEATURES = ("NC",) + MEASURES + ("T", "H")

MEASURE_NAMES = {
    "GA": "Government Advocation",
    "MU": "Mask Use",
    "SC": "School Closure",
    "CL": "City Lockdown",
    "MT": "Mass Testing",
    "ITB": "International Travel Ban",
    "CT": "Contact Tracing",
}

# lower edges of every bin after the first; value v gets code bisect_right(edges, v)
NC_EDGES = (10.0, 100.0)
MEASURE_EDGES = (1.0, 5.0, 10.0, 15.0)
T_EDGES = (0.0, 10.0, 20.0)
H_EDGES = (40.0, 80.0)

BIN_EDGES = {"NC": NC_EDGES, "T": T_EDGES, "H": H_EDGES}
BIN_EDGES.update({m: MEASURE_EDGES for m in MEASURES})

ARITIES = tuple(len(BIN_EDGES[f]) + 1 for f in FEATURES)

NC_STRATA = ("0-10", "10-100", "100plus")


@dataclass(frozen=True)
class MeasureSchedule:
    region: str
    dates: dict[str, dt.date] = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.dates) - set(MEASURES)
        if unknown:
            raise ConfigurationError(f"{self.region}: unknown measure codes {sorted(unknown)}")


@dataclass(frozen=True)
class WeatherSeries:
    region: str
    entries: dict[dt.date, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for d, (_, h) in self.entries.items():
            if not 0.0 <= h <= 100.0:
                raise ConfigurationError(f"{self.region}: humidity {h} on {d} outside [0, 100]")


@dataclass(frozen=True)
class FeatureRow:
    region: str
    date: dt.date
    r_t: float
    nc: float
    ga: int
    mu: int
    sc: int
    cl: int
    mt: int
    itb: int
    ct: int
    t: float
    h: float

    def values(self) -> tuple:
        """Feature values in ``FEATURES`` order."""
        return (self.nc, self.ga, self.mu, self.sc, self.cl, self.mt, self.itb, self.ct,
                self.t, self.h)


@dataclass(frozen=True)
class DiscreteRow:
    region: str
    date: dt.date
    r_t: float
    nc_raw: float
    codes: tuple[int, ...]
    label: bool | None = None

    def __getitem__(self, feature: str) -> int:
        return self.codes[FEATURES.index(feature)]

    @property
    def nc_stratum(self) -> str:
        return NC_STRATA[self.codes[0]]


@dataclass(frozen=True)
class LabeledDataset:
    rows: tuple[DiscreteRow, ...]
    theta: float

    @property
    def X(self) -> np.ndarray:
        return np.array([r.codes for r in self.rows], dtype=np.int64).reshape(-1, len(FEATURES))

    @property
    def y(self) -> np.ndarray:
        return np.array([bool(r.label) for r in self.rows], dtype=bool)

    @property
    def n_true(self) -> int:
        return sum(1 for r in self.rows if r.label)

    @property
    def n_false(self) -> int:
        return len(self.rows) - self.n_true

    def __len__(self):
        return len(self.rows)

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(tuple(self.rows[i] for i in indices), self.theta)


def days_since(impl_date: dt.date | None, current: dt.date) -> int:
    """Day count since implementation, the implementation day itself being day 1.
    0 means not (yet) implemented."""
    if impl_date is None or current < impl_date:
        return 0
    return (current - impl_date).days + 1


def assemble_rows(
    rt: RtSeries, nc: NewCaseSeries, measures: MeasureSchedule, weather: WeatherSeries
) -> list[FeatureRow]:
    """One row per R_t day, joined with new cases, measure ages and weather.

    Days without weather are dropped and counted in the log.
    """
    regions = {rt.region, nc.region, measures.region, weather.region}
    if len(regions) != 1:
        raise ConfigurationError(f"region mismatch while assembling rows: {sorted(regions)}")
    nc_by_date = dict(zip(nc.dates, nc.values.tolist()))
    rows, missing = [], 0
    for d, r_t, _ in rt.items():
        if d not in weather.entries:
            missing += 1
            continue
        if d not in nc_by_date:
            raise ConfigurationError(f"{rt.region}: no new-case value on {d}")
        temp, hum = weather.entries[d]
        ages = [days_since(measures.dates.get(m), d) for m in MEASURES]
        rows.append(FeatureRow(rt.region, d, r_t, nc_by_date[d], *ages, temp, hum))
    if missing:
        log.warning("%s: %d R_t day(s) dropped for missing weather", rt.region, missing)
    return rows


def bin_value(feature: str, value: float) -> int:
    if not np.isfinite(value):
        raise ParameterDomainError(f"{feature} value must be finite, got {value}")
    return bisect.bisect_right(BIN_EDGES[feature], value)


def discretize_row(row: FeatureRow) -> DiscreteRow:
    codes = tuple(bin_value(f, v) for f, v in zip(FEATURES, row.values()))
    return DiscreteRow(row.region, row.date, row.r_t, row.nc, codes)


def label_rows(rows, theta: float) -> LabeledDataset:
    """Label is True iff R_t < theta (strict)."""
    if not theta > 0:
        raise ParameterDomainError(f"theta must be positive, got {theta}")
    labeled = tuple(
        DiscreteRow(r.region, r.date, r.r_t, r.nc_raw, r.codes, bool(r.r_t < theta)) for r in rows
    )
    return LabeledDataset(labeled, float(theta))
