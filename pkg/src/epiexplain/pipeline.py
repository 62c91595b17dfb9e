"""Stage functions and the end-to-end run used by the CLI."""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .dataset import (
    NC_STRATA,
    LabeledDataset,
    MeasureSchedule,
    WeatherSeries,
    assemble_rows,
    discretize_row,
    label_rows,
)
from .explain import ShapleyExplainer, ecpi_explain, top_k
from .models import evaluate, save_model, train_ecpi, train_forest, train_test_split
from .report import RowTopK, aggregate, emit_evaluation, emit_report
from .rt_core import NewCaseSeries, estimate_rt, mean_filter, new_cases_from_cumulative
from .serial_interval import serial_interval

log = logging.getLogger(__name__)

METHODS = ("shap", "ecpi")


@dataclass
class RunConfig:
    cases: str | None = None
    measures: str | None = None
    weather: str | None = None
    si_mean: float = 7.0
    si_sd: float = 4.5
    horizon: int = 100
    filter_radius: int = 1
    min_cumulative: int = 20
    theta: list[float] = field(default_factory=lambda: [1.0, 2.0])
    k: list[int] = field(default_factory=lambda: [1, 2])
    tree_count: int = 100
    smoothing: float = 1.0
    split_fraction: float = 0.9
    seed: int = 0
    eval_repeats: int = 10
    shap_model: str = "forest"
    clamp_negative: bool = False
    output_dir: str = "epiexplain-out"
    workers: int = 1

    # fields that cannot change any output byte
    _NOT_ECHOED = ("output_dir", "workers")

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        for key in self._NOT_ECHOED:
            d.pop(key)
        for key in ("cases", "measures", "weather"):
            d[key] = Path(d[key]).name if d[key] else f"bundled:{key}.csv"
        return d


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def estimate_all(cases, si_mean=7.0, si_sd=4.5, horizon=100, filter_radius=1, min_cumulative=20,
                 clamp_negative=False):
    """Per region: raw new cases, then R_t from the smoothed new cases."""
    si = serial_interval(si_mean, si_sd, horizon)
    rts, raw = [], []
    for series in cases:
        new = new_cases_from_cumulative(series, clamp_negative=clamp_negative)
        rts.append(estimate_rt(mean_filter(new, filter_radius), si, min_cumulative))
        raw.append(new)
    return rts, raw


def build_rows(rt_series, raw_new_cases, measures, weather):
    """Discretized rows for every region, in region then date order."""
    by_measures = {m.region: m for m in measures}
    by_weather = {w.region: w for w in weather}
    rows = []
    for rt, nc in zip(rt_series, raw_new_cases):
        if rt.region not in by_measures:
            log.warning("%s: no measure dates, all measures treated as not implemented", rt.region)
        m = by_measures.get(rt.region, MeasureSchedule(rt.region))
        w = by_weather.get(rt.region, WeatherSeries(rt.region))
        rows.extend(discretize_row(r) for r in assemble_rows(rt, nc, m, w))
    return rows


def new_cases_from_rt_file(rt_series, nc_by_region):
    out = []
    for rt in rt_series:
        values = nc_by_region[rt.region]
        dates = tuple(sorted(values))
        out.append(NewCaseSeries(rt.region, dates, np.array([values[d] for d in dates])))
    return out


def explain_rows(dataset: LabeledDataset, method: str, model, k_max: int, workers: int = 1,
                 background=None):
    """Ranked factors for every row labeled True (R_t < theta)."""
    targets = [r for r in dataset.rows if r.label]
    if method == "shap":
        explainer = ShapleyExplainer(model, dataset.X if background is None else background)

        def one(row):
            return top_k(explainer.explain(row), k_max, toward_label=True)
    elif method == "ecpi":
        def one(row):
            return top_k(ecpi_explain(model, row), k_max)
    else:
        raise ValueError(f"unknown explanation method {method!r}")
    ranked = _map(one, targets, workers)
    records = []
    for row, factors in zip(targets, ranked):
        for rank, f in enumerate(factors, start=1):
            records.append((row.region, row.date, dataset.theta, method, rank, f.feature, f.code,
                            f.score))
    return records


def top_k_rows(records, strata_by_key, k: int):
    """Group explanation records into per-row RowTopK for one k."""
    grouped = {}
    for region, date, theta, method, rank, feat, code, _ in records:
        key = (region, date, theta, method)
        grouped.setdefault(key, []).append((rank, feat, code))
    out = []
    for (region, date, theta, method), items in grouped.items():
        items.sort()
        factors = tuple((f, c) for rank, f, c in items if rank <= k)
        out.append(RowTopK(region, date, theta, method, k, strata_by_key[(region, date)], factors))
    return out


def write_reports(records, rows, thetas, ks, out_dir):
    strata = {(r.region, r.date): r.nc_stratum for r in rows}
    written = []
    for theta in thetas:
        for k in ks:
            for method in METHODS:
                sel = [r for r in records if r[2] == theta and r[3] == method]
                per_row = top_k_rows(sel, strata, k)
                for stratum in (None,) + NC_STRATA:
                    counts = aggregate(per_row, stratum, theta=theta, k=k, method=method)
                    written.append(emit_report(counts, out_dir))
    return written


def evaluate_models(dataset: LabeledDataset, config: RunConfig):
    entries = []
    for rep in range(config.eval_repeats):
        seed = config.seed + rep
        train, test = train_test_split(dataset, config.split_fraction, seed)
        forest = train_forest(train, config.tree_count, seed, workers=config.workers)
        entries.append(("random_forest", dataset.theta, seed, evaluate(forest, test)))
        ecpi = train_ecpi(train, config.smoothing)
        entries.append(("ecpi", dataset.theta, seed, evaluate(ecpi, test)))
    entries.sort(key=lambda e: (e[0], e[2]))
    return entries


def run_pipeline(config: RunConfig) -> list[Path]:
    out = Path(config.output_dir)
    cases, measures, weather = io.ingest(config.cases, config.measures, config.weather,
                                         allow_decreasing=config.clamp_negative)
    inputs = {
        "cases": config.cases or io.bundled_path("cases.csv"),
        "measures": config.measures or io.bundled_path("measures.csv"),
        "weather": config.weather or io.bundled_path("weather.csv"),
    }

    rts, raw = estimate_all(cases, config.si_mean, config.si_sd, config.horizon,
                            config.filter_radius, config.min_cumulative, config.clamp_negative)
    written = [io.write_rt(out / "rt_series.csv", rts, raw)]

    # downstream stages read the written files so a staged CLI run gives identical results
    rt_series, nc_by_region = io.read_rt(written[0])
    rows = build_rows(rt_series, new_cases_from_rt_file(rt_series, nc_by_region), measures, weather)
    written.append(io.write_dataset(out / "dataset.csv", rows))
    rows = io.read_dataset(written[-1])

    records, evaluations = [], []
    k_max = max(config.k)
    for theta in config.theta:
        data = label_rows(rows, theta)
        forest = train_forest(data, config.tree_count, config.seed, workers=config.workers)
        ecpi = train_ecpi(data, config.smoothing)
        written.append(save_model(forest, out / "models" / f"forest_theta{io.fmt_theta(theta)}.json"))
        written.append(save_model(ecpi, out / "models" / f"ecpi_theta{io.fmt_theta(theta)}.json"))
        shap_model = forest if config.shap_model == "forest" else ecpi
        records += explain_rows(data, "shap", shap_model, k_max, config.workers)
        records += explain_rows(data, "ecpi", ecpi, k_max, config.workers)
        if config.eval_repeats > 0:
            evaluations += evaluate_models(data, config)

    written.append(io.write_explanations(out / "explanations.csv", records))
    written += write_reports(records, rows, config.theta, config.k, out / "reports")
    if evaluations:
        written.append(emit_evaluation(evaluations, out / "evaluation.csv"))
    written.append(write_manifest(out / "manifest.json", config, inputs, written, out))
    return written


def write_manifest(path, config: RunConfig, inputs, outputs, root) -> Path:
    doc = {
        "config": config.echo(),
        "seed": config.seed,
        "inputs": {name: io.file_sha256(p) for name, p in inputs.items()},
        "outputs": {
            Path(p).relative_to(root).as_posix(): io.file_sha256(p)
            for p in sorted(outputs, key=lambda p: Path(p).as_posix())
        },
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
