#!/usr/bin/env python3
"""Regenerate the bundled synthetic case and weather fixtures.

The real case counts and weather observations are not redistributed. Instead
each region's epidemic is simulated with a stochastic renewal process whose
daily reproduction number falls as control measures age (measure dates from
the bundled measures.csv). The result has the same shape as the real inputs:
18 regions, 2020-01-22 to 2020-04-02, one row per region-day.

    python scripts/make_fixtures.py            # rewrites src/epiexplain/data/
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from pathlib import Path

import numpy as np

from epiexplain.dataset import MEASURES, days_since
from epiexplain.io import read_measures
from epiexplain.serial_interval import serial_interval

DATA = Path(__file__).resolve().parents[1] / "src" / "epiexplain" / "data"
SIM_START = dt.date(2019, 12, 1)
WINDOW_START = dt.date(2020, 1, 22)
WINDOW_END = dt.date(2020, 4, 2)
SEED = 20200402
DISPERSION = 25.0

# full-strength log-reduction of R for each measure once it is two weeks old
EFFECT = {"GA": 0.10, "MU": 0.30, "SC": 0.12, "CL": 0.95, "MT": 0.30, "ITB": 0.08, "CT": 0.70}
WARM_EFFECT = 0.20  # log-reduction on days at or above 20 C

# region: (R0, [(first import day, days, imported cases per day), ...])
EPIDEMICS = {
    "Hubei": (3.1, [("2019-12-01", 3, 1.0)]),
    "Beijing": (2.4, [("2020-01-08", 14, 1.5), ("2020-03-01", 32, 0.8)]),
    "Guangdong": (2.5, [("2020-01-06", 16, 3.0), ("2020-03-05", 28, 0.8)]),
    "Hong Kong": (2.2, [("2020-01-16", 20, 0.8), ("2020-03-10", 23, 4.0)]),
    "Macau": (1.4, [("2020-01-20", 20, 0.35), ("2020-03-15", 18, 1.2)]),
    "Taiwan": (1.9, [("2020-01-18", 40, 0.3), ("2020-03-08", 25, 2.0)]),
    "Singapore": (2.2, [("2020-01-20", 20, 0.9), ("2020-02-20", 42, 1.5)]),
    "Japan": (2.1, [("2020-01-14", 25, 0.7), ("2020-02-15", 47, 2.0)]),
    "South Korea": (2.8, [("2020-01-20", 15, 0.3), ("2020-02-17", 3, 25.0), ("2020-03-01", 32, 3.0)]),
    "Australia": (2.6, [("2020-02-22", 40, 1.2)]),
    "France": (2.9, [("2020-02-16", 20, 0.6)]),
    "Germany": (2.8, [("2020-02-14", 20, 0.6)]),
    "Italy": (3.2, [("2020-02-08", 15, 0.5)]),
    "Spain": (3.1, [("2020-02-17", 20, 0.6)]),
    "United Kingdom": (2.8, [("2020-02-16", 20, 0.5)]),
    "California": (2.7, [("2020-02-21", 20, 0.8)]),
    "New York": (3.4, [("2020-02-24", 15, 0.9)]),
    "Washington": (2.9, [("2020-02-19", 20, 0.6)]),
}

# region: (temperature on 22 Jan, warming per day, mean humidity)
CLIMATE = {
    "Hubei": (4.0, 0.17, 78.0),
    "Beijing": (-3.0, 0.18, 40.0),
    "Guangdong": (14.0, 0.10, 70.0),
    "Hong Kong": (17.0, 0.07, 76.0),
    "Macau": (16.0, 0.08, 77.0),
    "Taiwan": (17.0, 0.06, 76.0),
    "Singapore": (27.0, 0.01, 80.0),
    "Japan": (6.0, 0.09, 50.0),
    "South Korea": (-1.0, 0.14, 55.0),
    "Australia": (23.5, -0.04, 68.0),
    "France": (5.0, 0.07, 80.0),
    "Germany": (2.0, 0.06, 78.0),
    "Italy": (6.0, 0.08, 72.0),
    "Spain": (9.0, 0.07, 65.0),
    "United Kingdom": (5.5, 0.05, 82.0),
    "California": (13.0, 0.05, 62.0),
    "New York": (1.0, 0.10, 60.0),
    "Washington": (5.0, 0.06, 78.0),
}

# the reference region-days used in the tests keep fixed weather values
PINNED_WEATHER = {
    ("Singapore", "2020-02-12"): (27.86, 83.86),
    ("Japan", "2020-03-26"): (17.375, 32.75),
    ("Germany", "2020-03-26"): (6.19, 39.35),
    ("South Korea", "2020-03-16"): (3.73, 48.47),
    ("Guangdong", "2020-02-08"): (15.89, 62.66),
}


def daterange(a: dt.date, b: dt.date):
    for i in range((b - a).days + 1):
        yield a + dt.timedelta(days=i)


def weather_for(region, rng):
    t0, slope, h0 = CLIMATE[region]
    out = {}
    for d in daterange(SIM_START, WINDOW_END):
        offset = (d - WINDOW_START).days
        temp = t0 + slope * offset + rng.normal(0.0, 2.0)
        hum = float(np.clip(h0 + rng.normal(0.0, 9.0), 5.0, 100.0))
        pinned = PINNED_WEATHER.get((region, d.isoformat()))
        if pinned:
            temp, hum = pinned
        out[d] = (round(temp, 3), round(hum, 2))
    return out


def simulate_region(region, schedule, weather, si, rng):
    r0, pulses = EPIDEMICS[region]
    pulses = [(dt.date.fromisoformat(a), dt.timedelta(days=n), rate) for a, n, rate in pulses]
    g = si.as_array()
    days = list(daterange(SIM_START, WINDOW_END))
    cases = np.zeros(len(days))
    noise = 0.0
    for t, d in enumerate(days):
        log_r = math.log(r0)
        for m in MEASURES:
            age = days_since(schedule.get(m), d)
            log_r -= EFFECT[m] * min(age / 14.0, 1.0)
        if weather[d][0] >= 20.0:
            log_r -= WARM_EFFECT
        noise = 0.7 * noise + rng.normal(0.0, 0.08)
        lags = min(t, len(g))
        pressure = float(np.dot(cases[t - lags : t][::-1], g[:lags])) if t else 0.0
        mean = math.exp(log_r + noise) * pressure
        mean += sum(rate for a, n, rate in pulses if a <= d < a + n)
        if mean > 0:
            cases[t] = rng.poisson(rng.gamma(DISPERSION, mean / DISPERSION))
    if region == "United Kingdom":
        # reporting stall seen in the real UK series
        cases[days.index(dt.date(2020, 3, 15))] = 0
    cumulative = np.cumsum(cases).astype(np.int64)
    return {d: int(c) for d, c in zip(days, cumulative) if d >= WINDOW_START}


def main():
    rng = np.random.default_rng(SEED)
    schedules = {m.region: m.dates for m in read_measures(DATA / "measures.csv")}
    si = serial_interval()
    case_rows, weather_rows = [], []
    for region in sorted(EPIDEMICS):
        weather = weather_for(region, rng)
        cum = simulate_region(region, schedules.get(region, {}), weather, si, rng)
        for d in daterange(WINDOW_START, WINDOW_END):
            case_rows.append((region, d.isoformat(), cum[d]))
            temp, hum = weather[d]
            weather_rows.append((region, d.isoformat(), f"{temp:.3f}", f"{hum:.2f}"))
    with (DATA / "cases.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("region", "date", "cumulative_confirmed"))
        w.writerows(case_rows)
    with (DATA / "weather.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("region", "date", "temp_c", "humidity_pct"))
        w.writerows(weather_rows)


if __name__ == "__main__":
    main()
