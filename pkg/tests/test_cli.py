import csv
import datetime as dt
import json

import pytest

from epiexplain import io
from epiexplain.cli import OUTPUT_ENV, main
from epiexplain.errors import DataIntegrityError, IngestionError


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def test_bundled_ingest(bundled_inputs):
    cases, measures, weather = bundled_inputs
    assert len(measures) == 18
    by_region = {m.region: m for m in measures}
    assert str(by_region["Hubei"].dates["CL"]) == "2020-01-23"
    assert {c.region for c in cases} == {w.region for w in weather} == set(by_region)


def test_empty_cases_file(tmp_path):
    path = write_csv(tmp_path / "cases.csv", io.CASES_HEADER, [])
    with pytest.raises(IngestionError, match="no case series"):
        io.read_cases(path)


def test_all_bad_lines_reported(tmp_path):
    rows = [("A", "2020-03-01", "5"), ("A", "2020-03-02", "x"), ("A", "03/03/2020", "7"),
            ("A", "2020-03-04", "-1")]
    path = write_csv(tmp_path / "cases.csv", io.CASES_HEADER, rows)
    with pytest.raises(IngestionError) as info:
        io.read_cases(path)
    assert [p[1] for p in info.value.problems] == [3, 4, 5]
    assert f"{path}:4:" in str(info.value)


def test_decreasing_line_names_date(tmp_path):
    rows = [("A", "2020-03-01", "5"), ("A", "2020-03-02", "9"), ("A", "2020-03-03", "7")]
    path = write_csv(tmp_path / "cases.csv", io.CASES_HEADER, rows)
    with pytest.raises(DataIntegrityError, match="2020-03-03"):
        io.read_cases(path)
    (series,) = io.read_cases(path, allow_decreasing=True)
    assert series.cumulative == (5, 9, 7)


def test_wrong_header(tmp_path):
    path = write_csv(tmp_path / "w.csv", ("region", "day", "t", "h"), [])
    with pytest.raises(IngestionError, match="expected header"):
        io.read_weather(path)


def test_exit_code_ingestion(tmp_path, capsys):
    rows = [("A", "2020-03-01", "5"), ("A", "2020-03-02", "3")]
    path = write_csv(tmp_path / "cases.csv", io.CASES_HEADER, rows)
    assert main(["estimate-rt", "--cases", str(path), "--output", str(tmp_path / "rt.csv")]) == 2
    err = capsys.readouterr().err
    assert "[ingest]" in err and "2020-03-02" in err


def test_clamp_negative_flag(tmp_path):
    rows = [("A", f"2020-03-{d:02d}", str(c)) for d, c in
            zip(range(1, 11), [20, 30, 45, 40, 60, 80, 100, 130, 160, 200])]
    path = write_csv(tmp_path / "cases.csv", io.CASES_HEADER, rows)
    out = tmp_path / "rt.csv"
    assert main(["estimate-rt", "--cases", str(path), "--clamp-negative", "--output", str(out)]) == 0
    _, nc = io.read_rt(out)
    assert nc["A"][dt.date(2020, 3, 4)] == 0


def test_exit_code_estimation(tmp_path):
    assert main(["simulate", "--r", "1.2", "--seed-cases", "5", "--si-sd", "0",
                 "--output", str(tmp_path / "s.csv")]) == 3


def test_exit_code_training(tmp_path):
    out = tmp_path / "rt.csv"
    assert main(["estimate-rt", "--output", str(out)]) == 0
    data = tmp_path / "dataset.csv"
    assert main(["build-dataset", "--rt", str(out), "--output", str(data)]) == 0
    # R_t is never negative, so theta 0 leaves only the False class
    code = main(["train", "--dataset", str(data), "--theta", "0", "--model", "ecpi",
                 "--output", str(tmp_path / "m.json")])
    assert code == 4


def test_exit_code_explanation(tmp_path, bundled_rows):
    data = io.write_dataset(tmp_path / "dataset.csv", bundled_rows)
    model = tmp_path / "forest.json"
    assert main(["train", "--dataset", str(data), "--tree-count", "3", "--output", str(model)]) == 0
    code = main(["explain", "--dataset", str(data), "--model-file", str(model), "--method", "ecpi",
                 "--output", str(tmp_path / "e.csv")])
    assert code == 5


def test_exit_code_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = main(["simulate", "--r", "1.0", "--days", "3", "--seed-cases", "2",
                 "--output", str(blocker / "sim.csv")])
    assert code == 6


def test_simulate_command(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--r", "2", "--days", "4", "--seed-cases", "1", "--horizon", "1",
                 "--si-mean", "1", "--si-sd", "0.01", "--output", str(out)]) == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 6


FAST = ["--theta", "1", "--k", "1", "--tree-count", "8", "--eval-repeats", "1"]


@pytest.fixture(scope="module")
def single_panel_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["run", *FAST, "--output-dir", str(out)]) == 0
    return out


def test_single_panel_outputs(single_panel_run):
    reports = sorted(p.name for p in (single_panel_run / "reports").iterdir())
    expected = sorted(
        f"top1_theta1_{m}{s}.csv"
        for m in ("shap", "ecpi")
        for s in ("", "_nc0-10", "_nc10-100", "_nc100plus")
    )
    assert reports == expected
    models = sorted(p.name for p in (single_panel_run / "models").iterdir())
    assert models == ["ecpi_theta1.json", "forest_theta1.json"]
    manifest = json.loads((single_panel_run / "manifest.json").read_text())
    assert manifest["config"]["theta"] == [1.0]
    assert "workers" not in manifest["config"] and "output_dir" not in manifest["config"]
    assert set(manifest["inputs"]) == {"cases", "measures", "weather"}
    for name, digest in manifest["outputs"].items():
        assert io.file_sha256(single_panel_run / name) == digest


def test_staged_commands_match_run(single_panel_run, tmp_path):
    s = tmp_path
    steps = [
        ["estimate-rt", "--output", str(s / "rt_series.csv")],
        ["build-dataset", "--rt", str(s / "rt_series.csv"), "--output", str(s / "dataset.csv")],
        ["train", "--dataset", str(s / "dataset.csv"), "--tree-count", "8",
         "--output", str(s / "models" / "forest_theta1.json")],
        ["train", "--dataset", str(s / "dataset.csv"), "--model", "ecpi",
         "--output", str(s / "models" / "ecpi_theta1.json")],
        ["explain", "--dataset", str(s / "dataset.csv"), "--method", "shap", "--k", "1",
         "--model-file", str(s / "models" / "forest_theta1.json"),
         "--output", str(s / "explanations.csv")],
        ["explain", "--dataset", str(s / "dataset.csv"), "--method", "ecpi", "--k", "1", "--append",
         "--model-file", str(s / "models" / "ecpi_theta1.json"),
         "--output", str(s / "explanations.csv")],
        ["report", "--explanations", str(s / "explanations.csv"), "--dataset", str(s / "dataset.csv"),
         "--k", "1", "--output-dir", str(s / "reports")],
    ]
    for argv in steps:
        assert main(argv) == 0, argv
    names = ["rt_series.csv", "dataset.csv", "explanations.csv",
             "models/forest_theta1.json", "models/ecpi_theta1.json"]
    names += [f"reports/{p.name}" for p in (single_panel_run / "reports").iterdir()]
    for name in names:
        assert (s / name).read_bytes() == (single_panel_run / name).read_bytes(), name


def test_output_dir_from_environment(tmp_path, monkeypatch, single_panel_run):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env-out"))
    args = ["report", "--explanations", str(single_panel_run / "explanations.csv"),
            "--dataset", str(single_panel_run / "dataset.csv"), "--k", "1"]
    assert main(args) == 0
    assert (tmp_path / "env-out" / "top1_theta1_shap.csv").exists()
    assert main(args + ["--output-dir", str(tmp_path / "flag-out")]) == 0
    assert (tmp_path / "flag-out" / "top1_theta1_shap.csv").exists()
