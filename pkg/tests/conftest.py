import os
from pathlib import Path

import pytest

from epiexplain import io, pipeline
from epiexplain.dataset import label_rows

ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def bundled_inputs():
    return io.ingest()


@pytest.fixture(scope="session")
def bundled_rows(bundled_inputs):
    cases, measures, weather = bundled_inputs
    rts, raw = pipeline.estimate_all(cases)
    return pipeline.build_rows(rts, raw, measures, weather)


@pytest.fixture(scope="session")
def dataset_theta1(bundled_rows):
    return label_rows(bundled_rows, 1.0)


@pytest.fixture(scope="session")
def dataset_theta2(bundled_rows):
    return label_rows(bundled_rows, 2.0)


REFERENCE_ENV = "EPIEXPLAIN_REFERENCE_DATA"


@pytest.fixture(scope="session")
def reference_inputs():
    """cases.csv and weather.csv from the original sources, in the bundled schemas."""
    root = os.environ.get(REFERENCE_ENV)
    if not root:
        pytest.skip(f"set {REFERENCE_ENV} to a directory with the original cases.csv and weather.csv")
    root = Path(root)
    measures = root / "measures.csv"
    return io.ingest(root / "cases.csv", measures if measures.exists() else None,
                     root / "weather.csv")


@pytest.fixture(scope="session")
def reference_rows(reference_inputs):
    cases, measures, weather = reference_inputs
    rts, raw = pipeline.estimate_all(cases)
    return pipeline.build_rows(rts, raw, measures, weather)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, text in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number}: {status}  {text}")
