import csv
import datetime as dt
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epiexplain.dataset import FEATURES, NC_STRATA
from epiexplain.errors import AggregationError
from epiexplain.models import EvalReport
from epiexplain.report import RowTopK, aggregate, emit_evaluation, emit_report

D = dt.date(2020, 3, 1)


def row(factors, stratum="10-100", theta=1.0, k=1, method="shap", day=0):
    return RowTopK("R", D + dt.timedelta(days=day), theta, method, k, stratum, tuple(factors))


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_counts_top1():
    rows = [row([("CL", 4)], day=0), row([("CL", 4)], day=1), row([("CT", 4)], day=2)]
    counts = aggregate(rows)
    assert counts.counts == {("CL", 4): 2, ("CT", 4): 1}
    assert counts.n_rows == 3
    assert counts.ranked() == [("CL", 4, 2), ("CT", 4, 1)]
    assert counts.fractions()[("CL", 4)] == pytest.approx(2 / 3)


def test_top2_counts_every_listed_factor():
    rows = [row([("CT", 4), ("CL", 4)], k=2), row([("CL", 4)], k=2, day=1)]
    assert aggregate(rows).counts == {("CT", 4): 1, ("CL", 4): 2}


def test_row_factors_truncated_to_k():
    rows = [row([("CT", 4), ("CL", 4)], k=1)]
    assert aggregate(rows).counts == {("CT", 4): 1}


def test_empty_input_writes_header_only(tmp_path):
    counts = aggregate([], theta=2.0, k=1, method="ecpi")
    assert counts.total() == 0 and counts.fractions() == {}
    path = emit_report(counts, tmp_path)
    assert path.name == "top1_theta2_ecpi.csv"
    assert read(path) == [["feature", "code", "count", "fraction"]]


def test_mixed_inputs_rejected():
    with pytest.raises(AggregationError):
        aggregate([row([("CL", 4)]), row([("CL", 4)], theta=2.0)])
    with pytest.raises(AggregationError):
        aggregate([row([("CL", 4)]), row([("CL", 4)], method="ecpi")])
    with pytest.raises(AggregationError):
        aggregate([row([("CL", 4)])], stratum="1000plus")


def test_file_names():
    assert aggregate([], "100plus", theta=1.0, k=2, method="shap").filename == \
        "top2_theta1_shap_nc100plus.csv"
    assert aggregate([], None, theta=1.5, k=1, method="ecpi").filename == "top1_theta1.5_ecpi.csv"


factor = st.tuples(st.sampled_from(FEATURES), st.integers(0, 4))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.lists(factor, max_size=2, unique=True), st.sampled_from(NC_STRATA)),
                max_size=40))
def test_strata_partition_and_fractions(entries):
    rows = [row(f, stratum=s, k=2, day=i) for i, (f, s) in enumerate(entries)]
    whole = aggregate(rows)
    parts = [aggregate(rows, s) for s in NC_STRATA]
    merged = {}
    for p in parts:
        for key, n in p.counts.items():
            merged[key] = merged.get(key, 0) + n
    assert merged == whole.counts
    assert sum(p.n_rows for p in parts) == whole.n_rows
    if whole.total():
        assert math.isclose(math.fsum(whole.fractions().values()), 1.0, abs_tol=1e-12)


def test_report_file_content_and_order(tmp_path):
    rows = [row([("CT", 4)]), row([("CL", 4)], day=1), row([("CL", 3)], day=2),
            row([("CL", 3)], day=3)]
    path = emit_report(aggregate(rows), tmp_path)
    assert read(path) == [
        ["feature", "code", "count", "fraction"],
        ["CL", "3", "2", "0.500000"],
        ["CL", "4", "1", "0.250000"],
        ["CT", "4", "1", "0.250000"],
    ]


def test_report_bytes_stable(tmp_path):
    rows = [row([("CL", 4)], day=0), row([("T", 2)], day=1), row([("H", 1)], day=2)]
    a = emit_report(aggregate(rows), tmp_path / "a.csv").read_bytes()
    b = emit_report(aggregate(list(reversed(rows))), tmp_path / "b.csv").read_bytes()
    assert a == b
    assert b"0.333333" in a


def test_evaluation_file(tmp_path):
    entries = [("random_forest", 1.0, 0, EvalReport(79, 21, 21, 79)),
               ("random_forest", 1.0, 1, EvalReport(3, 1, 1, 5))]
    lines = read(emit_evaluation(entries, tmp_path / "evaluation.csv"))
    assert lines[0] == ["model", "theta", "seed", "true_positive", "false_positive",
                        "false_negative", "true_negative", "precision", "recall"]
    assert lines[1] == ["random_forest", "1", "0", "79", "21", "21", "79", "0.790000", "0.790000"]
    assert lines[3][:3] == ["random_forest", "1", "mean"]
    assert lines[3][-2:] == ["0.770000", "0.770000"]
