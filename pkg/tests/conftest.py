import re

import numpy as np
import pytest

from geoproj.geometry import Connection

CRITERION_RE = re.compile(r"test_criterion_(\d+)_(\w+)")
_outcomes: dict[int, tuple[str, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=list(Connection), ids=lambda c: c.value)
def connection(request):
    return request.param


def pytest_runtest_logreport(report):
    m = CRITERION_RE.search(report.nodeid)
    if not m or "test_acceptance" not in report.nodeid:
        return
    n, name = int(m.group(1)), m.group(2).replace("_", " ")
    if report.when == "call" or report.outcome != "passed":
        prev = _outcomes.get(n, ("PASS", name))[0]
        status = "PASS" if report.outcome == "passed" and prev == "PASS" else "FAIL"
        _outcomes[n] = (status, name)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status, name = _outcomes[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}  {name}")
