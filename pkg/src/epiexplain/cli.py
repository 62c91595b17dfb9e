"""Command-line entry point.

Exit codes: 0 ok, 2 ingestion, 3 estimation, 4 training, 5 explanation, 6 I/O.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import io, pipeline
from .dataset import label_rows
from .errors import (
    ConfigurationError,
    EpiExplainError,
    EstimationError,
    ExplanationError,
    IngestionError,
    OutputError,
    TrainingError,
)
from .models import load_model, save_model, train_ecpi, train_forest
from .rt_core import simulate_cases
from .serial_interval import serial_interval

OUTPUT_ENV = "EPIEXPLAIN_OUTPUT_DIR"
STAGE_CODES = {"ingest": 2, "estimate": 3, "train": 4, "explain": 5, "io": 6}

log = logging.getLogger("epiexplain")


class StageError(Exception):
    def __init__(self, stage, exc):
        self.stage = stage
        self.exc = exc
        super().__init__(f"[{stage}] {exc}")

    @property
    def exit_code(self):
        if isinstance(self.exc, (IngestionError, OutputError)):
            return self.exc.exit_code
        if isinstance(self.exc, OSError):
            return STAGE_CODES["io"]
        return STAGE_CODES.get(self.stage, 1)


def _stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (EpiExplainError, OSError, ValueError) as exc:
        raise StageError(stage, exc) from exc


def _add_si_args(p):
    p.add_argument("--si-mean", type=float, default=7.0, help="serial interval mean, days")
    p.add_argument("--si-sd", type=float, default=4.5, help="serial interval sd, days")
    p.add_argument("--horizon", type=int, default=100, help="serial interval horizon, days")


def _add_estimate_args(p):
    _add_si_args(p)
    p.add_argument("--filter-radius", type=int, default=1)
    p.add_argument("--min-cumulative", type=int, default=20)
    p.add_argument("--clamp-negative", action="store_true",
                   help="clamp decreasing cumulative counts instead of failing")


def _add_input_args(p, cases=True):
    if cases:
        p.add_argument("--cases", help="region,date,cumulative_confirmed (default: bundled)")
    p.add_argument("--measures", help="region,measure_code,date (default: bundled)")
    p.add_argument("--weather", help="region,date,temp_c,humidity_pct (default: bundled)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epiexplain", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-rt", help="R_t per region from cumulative case counts")
    p.add_argument("--cases")
    _add_estimate_args(p)
    p.add_argument("--output", required=True)

    p = sub.add_parser("build-dataset", help="discretized region-day rows from an R_t file")
    p.add_argument("--rt", required=True, help="output of estimate-rt")
    _add_input_args(p, cases=False)
    p.add_argument("--output", required=True)

    p = sub.add_parser("train", help="train one classifier for R_t < theta")
    p.add_argument("--dataset", required=True)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--model", choices=("forest", "ecpi"), default="forest")
    p.add_argument("--tree-count", type=int, default=100)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", required=True)

    p = sub.add_parser("explain", help="top-k factors for every row with R_t < theta")
    p.add_argument("--dataset", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--method", choices=("shap", "ecpi"), required=True)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", required=True)
    p.add_argument("--append", action="store_true", help="append to an existing explanation file")

    p = sub.add_parser("report", help="aggregate explanations into per-panel count files")
    p.add_argument("--explanations", required=True)
    p.add_argument("--dataset", required=True, help="for new-case strata")
    p.add_argument("--k", type=int, action="append", help="repeatable; default 1 and 2")
    p.add_argument("--output-dir")

    p = sub.add_parser("simulate", help="forward renewal simulation")
    _add_si_args(p)
    p.add_argument("--r", type=float, action="append", help="R per day after the seed (repeatable)")
    p.add_argument("--days", type=int, default=0, help="repeat a single --r value this many days")
    p.add_argument("--seed-cases", type=float, action="append", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("run", help="full pipeline with default settings")
    _add_input_args(p)
    _add_estimate_args(p)
    p.add_argument("--theta", type=float, action="append")
    p.add_argument("--k", type=int, action="append")
    p.add_argument("--tree-count", type=int, default=100)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--split-fraction", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-repeats", type=int, default=10)
    p.add_argument("--shap-model", choices=("forest", "ecpi"), default="forest")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output-dir")
    return parser


def _output_dir(arg):
    return arg or os.environ.get(OUTPUT_ENV) or "epiexplain-out"


def cmd_estimate_rt(args):
    cases = _stage("ingest", io.read_cases, args.cases or io.bundled_path("cases.csv"),
                   args.clamp_negative)
    rts, raw = _stage("estimate", pipeline.estimate_all, cases, args.si_mean, args.si_sd,
                      args.horizon, args.filter_radius, args.min_cumulative, args.clamp_negative)
    _stage("io", io.write_rt, args.output, rts, raw)


def cmd_build_dataset(args):
    rts, nc = _stage("ingest", io.read_rt, args.rt)
    measures = _stage("ingest", io.read_measures, args.measures or io.bundled_path("measures.csv"))
    weather = _stage("ingest", io.read_weather, args.weather or io.bundled_path("weather.csv"))
    rows = _stage("estimate", pipeline.build_rows, rts, pipeline.new_cases_from_rt_file(rts, nc),
                  measures, weather)
    _stage("io", io.write_dataset, args.output, rows)


def cmd_train(args):
    rows = _stage("ingest", io.read_dataset, args.dataset)
    data = _stage("train", label_rows, rows, args.theta)
    if args.model == "forest":
        model = _stage("train", train_forest, data, args.tree_count, args.seed, args.workers)
    else:
        model = _stage("train", train_ecpi, data, args.smoothing)
    _stage("io", save_model, model, args.output)


def cmd_explain(args):
    rows = _stage("ingest", io.read_dataset, args.dataset)
    model = _stage("ingest", load_model, args.model_file)
    if args.method == "ecpi" and model.kind != "ecpi":
        raise StageError("explain", ConfigurationError("ecpi explanations need an ecpi model file"))
    data = _stage("explain", label_rows, rows, args.theta)
    records = _stage("explain", pipeline.explain_rows, data, args.method, model, args.k, args.workers)
    if args.append and Path(args.output).exists():
        records = _stage("ingest", io.read_explanations, args.output) + records
    _stage("io", io.write_explanations, args.output, records)


def cmd_report(args):
    records = _stage("ingest", io.read_explanations, args.explanations)
    rows = _stage("ingest", io.read_dataset, args.dataset)
    thetas = sorted({r[2] for r in records})
    _stage("io", pipeline.write_reports, records, rows, thetas, args.k or [1, 2],
           Path(_output_dir(args.output_dir)))


def cmd_simulate(args):
    r = list(args.r or [])
    if args.days:
        if len(r) != 1:
            raise StageError("estimate", ConfigurationError("--days needs exactly one --r value"))
        r = r * args.days
    si = _stage("estimate", serial_interval, args.si_mean, args.si_sd, args.horizon)
    series = _stage("estimate", simulate_cases, r, si, args.seed_cases)
    _stage("io", io.write_simulation, args.output, series)


def cmd_run(args):
    config = pipeline.RunConfig(
        cases=args.cases, measures=args.measures, weather=args.weather,
        si_mean=args.si_mean, si_sd=args.si_sd, horizon=args.horizon,
        filter_radius=args.filter_radius, min_cumulative=args.min_cumulative,
        theta=args.theta or [1.0, 2.0], k=args.k or [1, 2],
        tree_count=args.tree_count, smoothing=args.smoothing,
        split_fraction=args.split_fraction, seed=args.seed, eval_repeats=args.eval_repeats,
        shap_model=args.shap_model, clamp_negative=args.clamp_negative,
        output_dir=_output_dir(args.output_dir), workers=args.workers,
    )
    try:
        pipeline.run_pipeline(config)
    except IngestionError as exc:
        raise StageError("ingest", exc) from exc
    except EstimationError as exc:
        raise StageError("estimate", exc) from exc
    except TrainingError as exc:
        raise StageError("train", exc) from exc
    except ExplanationError as exc:
        raise StageError("explain", exc) from exc
    except (OutputError, OSError) as exc:
        raise StageError("io", exc) from exc
    except EpiExplainError as exc:
        raise StageError(_stage_of(exc), exc) from exc


def _stage_of(exc):
    for stage, code in STAGE_CODES.items():
        if getattr(exc, "exit_code", None) == code:
            return stage
    return "run"


COMMANDS = {
    "estimate-rt": cmd_estimate_rt,
    "build-dataset": cmd_build_dataset,
    "train": cmd_train,
    "explain": cmd_explain,
    "report": cmd_report,
    "simulate": cmd_simulate,
    "run": cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except StageError as exc:
        print(f"epiexplain {args.command}: error {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
