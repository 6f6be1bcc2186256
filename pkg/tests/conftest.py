import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    mark = getattr(report, "criterion", None)
    if mark is not None:
        _criteria[report.nodeid] = (mark, report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report.criterion = m.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, ((number, title), outcome) in sorted(_criteria.items(), key=lambda kv: kv[1][0]):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title}  ({nodeid.split('::')[-1]})")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_probs(rng, n, m, conc=1.0):
    return rng.dirichlet(np.full(m, conc), size=n)
