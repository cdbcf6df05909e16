import os
from pathlib import Path

import numpy as np
import pytest

from lwr.kernels import available_backends
from lwr.numerics import RandomStream

DATA_DIR = Path(os.environ.get("LWR_DATA_DIR", Path(__file__).resolve().parents[1] / "data"))
FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def rng():
    return RandomStream(12345)


@pytest.fixture
def np_rng():
    return np.random.default_rng(2024)


@pytest.fixture(params=sorted(available_backends()))
def backend(request):
    return available_backends()[request.param]


# ---------------------------------------------------------------- acceptance report

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        details = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        if report.outcome == "skipped" and isinstance(report.longrepr, tuple):
            details = report.longrepr[2]
        _CRITERIA[number] = (title, status, details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, details = _CRITERIA[number]
        line = f"criterion {number:>2} {status}: {title}"
        terminalreporter.write_line(line + (f" ({details})" if details else ""))
