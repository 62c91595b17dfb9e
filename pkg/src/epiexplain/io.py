"""CSV readers and writers for every file the pipeline consumes or produces.

Input schemas (header row required, ISO-8601 dates):

* cases:    ``region,date,cumulative_confirmed``
* measures: ``region,measure_code,date``
* weather:  ``region,date,temp_c,humidity_pct``

Readers collect every malformed line before raising, so one run reports all problems.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
from collections import defaultdict
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import FEATURES, MEASURES, DiscreteRow, MeasureSchedule, WeatherSeries
from .errors import DataIntegrityError, IngestionError, OutputError
from .rt_core import CaseSeries, RtSeries

CASES_HEADER = ("region", "date", "cumulative_confirmed")
MEASURES_HEADER = ("region", "measure_code", "date")
WEATHER_HEADER = ("region", "date", "temp_c", "humidity_pct")
RT_HEADER = ("region", "date", "rt", "new_cases", "cumulative_confirmed")
DATASET_HEADER = ("region", "date", "rt", "nc_raw") + FEATURES
EXPLANATION_HEADER = ("region", "date", "theta", "method", "rank", "feature", "code", "value_score")
SIMULATION_HEADER = ("day", "date", "new_cases")

BUNDLED = ("cases.csv", "measures.csv", "weather.csv")


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("epiexplain") / "data" / name))


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def fmt_float(x: float) -> str:
    out = f"{x:.6f}"
    return "0.000000" if out == "-0.000000" else out


def fmt_theta(theta: float) -> str:
    return f"{theta:g}"


def _read_rows(path, header):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    first = next(reader, None)
    if first is None:
        return []
    if tuple(c.strip() for c in first) != header:
        raise IngestionError(f"{path}: expected header {','.join(header)}, got {','.join(first)}")
    return [(i, row) for i, row in enumerate(reader, start=2) if any(c.strip() for c in row)]


def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def read_cases(path, allow_decreasing: bool = False) -> list[CaseSeries]:
    """Per-region cumulative series. Decreasing counts are reported as integrity
    problems unless ``allow_decreasing`` defers them to clamping downstream."""
    problems = []
    by_region = defaultdict(list)
    for line, row in _read_rows(path, CASES_HEADER):
        if len(row) != 3:
            problems.append((path, line, f"expected 3 fields, got {len(row)}"))
            continue
        try:
            d = _parse_date(row[1])
        except ValueError:
            problems.append((path, line, f"bad date {row[1]!r}"))
            continue
        try:
            count = int(row[2])
        except ValueError:
            problems.append((path, line, f"bad count {row[2]!r}"))
            continue
        if count < 0:
            problems.append((path, line, f"negative count {count}"))
            continue
        by_region[row[0].strip()].append((d, count, line))
    if problems:
        raise IngestionError(f"{path}: malformed case lines", problems)
    if not by_region:
        raise IngestionError(f"{path}: no case series found")
    out = []
    for region in sorted(by_region):
        entries = sorted(by_region[region])
        for (d0, c0, _), (d1, c1, line) in zip(entries, entries[1:]):
            if (d1 - d0).days != 1:
                problems.append((path, line, f"{region}: {d1} does not follow {d0} (gap or duplicate)"))
            if c1 < c0 and not allow_decreasing:
                problems.append(
                    (path, line, f"{region}: cumulative count decreases on {d1.isoformat()} ({c0} -> {c1})")
                )
        if not problems:
            out.append(CaseSeries(region, tuple(e[0] for e in entries), tuple(e[1] for e in entries)))
    if problems:
        raise DataIntegrityError(f"{path}: inconsistent case series", problems)
    return out


def read_measures(path) -> list[MeasureSchedule]:
    problems = []
    by_region = defaultdict(dict)
    for line, row in _read_rows(path, MEASURES_HEADER):
        if len(row) != 3:
            problems.append((path, line, f"expected 3 fields, got {len(row)}"))
            continue
        region, code = row[0].strip(), row[1].strip()
        if code not in MEASURES:
            problems.append((path, line, f"unknown measure code {code!r}"))
            continue
        try:
            d = _parse_date(row[2])
        except ValueError:
            problems.append((path, line, f"bad date {row[2]!r}"))
            continue
        if code in by_region[region]:
            problems.append((path, line, f"{region}: duplicate date for {code}"))
            continue
        by_region[region][code] = d
    if problems:
        raise IngestionError(f"{path}: malformed measure lines", problems)
    return [MeasureSchedule(r, dict(by_region[r])) for r in sorted(by_region)]


def read_weather(path) -> list[WeatherSeries]:
    problems = []
    by_region = defaultdict(dict)
    for line, row in _read_rows(path, WEATHER_HEADER):
        if len(row) != 4:
            problems.append((path, line, f"expected 4 fields, got {len(row)}"))
            continue
        try:
            d = _parse_date(row[1])
            temp, hum = float(row[2]), float(row[3])
        except ValueError as exc:
            problems.append((path, line, str(exc)))
            continue
        if not 0 <= hum <= 100:
            problems.append((path, line, f"humidity {hum} outside [0, 100]"))
            continue
        region = row[0].strip()
        if d in by_region[region]:
            problems.append((path, line, f"{region}: duplicate weather for {d}"))
            continue
        by_region[region][d] = (temp, hum)
    if problems:
        raise IngestionError(f"{path}: malformed weather lines", problems)
    return [WeatherSeries(r, dict(by_region[r])) for r in sorted(by_region)]


def ingest(cases_path=None, measures_path=None, weather_path=None, allow_decreasing=False):
    """Read the three inputs, defaulting to the bundled fixtures."""
    cases = read_cases(cases_path or bundled_path("cases.csv"), allow_decreasing)
    measures = read_measures(measures_path or bundled_path("measures.csv"))
    weather = read_weather(weather_path or bundled_path("weather.csv"))
    return cases, measures, weather


def _write(path, header, rows) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def write_rt(path, series, new_cases) -> Path:
    """``series`` and ``new_cases`` are parallel lists of RtSeries / NewCaseSeries."""
    rows = []
    for rt, nc in zip(series, new_cases):
        nc_by_date = dict(zip(nc.dates, nc.values.tolist()))
        for d, r, cum in rt.items():
            rows.append((rt.region, d.isoformat(), fmt_float(r), fmt_float(nc_by_date[d]), int(cum)))
    return _write(path, RT_HEADER, rows)


def read_rt(path) -> tuple[list[RtSeries], dict]:
    by_region = defaultdict(list)
    for line, row in _read_rows(path, RT_HEADER):
        try:
            by_region[row[0]].append((_parse_date(row[1]), float(row[2]), float(row[3]), int(row[4])))
        except (ValueError, IndexError) as exc:
            raise IngestionError(f"{path}:{line}: {exc}") from exc
    series, new_cases = [], {}
    for region in sorted(by_region):
        e = sorted(by_region[region])
        series.append(RtSeries(region, tuple(x[0] for x in e), np.array([x[1] for x in e]),
                               np.array([x[3] for x in e], dtype=np.int64)))
        new_cases[region] = {x[0]: x[2] for x in e}
    return series, new_cases


def write_dataset(path, rows) -> Path:
    out = [
        (r.region, r.date.isoformat(), fmt_float(r.r_t), fmt_float(r.nc_raw), *r.codes) for r in rows
    ]
    return _write(path, DATASET_HEADER, out)


def read_dataset(path) -> list[DiscreteRow]:
    rows = []
    problems = []
    for line, row in _read_rows(path, DATASET_HEADER):
        if len(row) != len(DATASET_HEADER):
            problems.append((path, line, f"expected {len(DATASET_HEADER)} fields, got {len(row)}"))
            continue
        try:
            rows.append(
                DiscreteRow(row[0], _parse_date(row[1]), float(row[2]), float(row[3]),
                            tuple(int(c) for c in row[4:]))
            )
        except (ValueError, IndexError) as exc:
            problems.append((path, line, str(exc)))
    if problems:
        raise IngestionError(f"{path}: malformed dataset lines", problems)
    return rows


def write_explanations(path, records) -> Path:
    """``records``: iterables of (region, date, theta, method, rank, feature, code, score)."""
    rows = [
        (reg, d.isoformat(), fmt_theta(theta), method, rank, feat, code, fmt_float(score))
        for reg, d, theta, method, rank, feat, code, score in records
    ]
    return _write(path, EXPLANATION_HEADER, rows)


def read_explanations(path) -> list[tuple]:
    out = []
    for line, row in _read_rows(path, EXPLANATION_HEADER):
        try:
            out.append((row[0], _parse_date(row[1]), float(row[2]), row[3], int(row[4]), row[5],
                        int(row[6]), float(row[7])))
        except (ValueError, IndexError) as exc:
            raise IngestionError(f"{path}:{line}: {exc}") from exc
    return out


def write_simulation(path, series) -> Path:
    rows = [(i, d.isoformat(), fmt_float(v)) for i, (d, v) in enumerate(zip(series.dates, series.values))]
    return _write(path, SIMULATION_HEADER, rows)
