import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hbac.spin import SpinSystem  # noqa: E402


@pytest.fixture
def two_spin_system():
    """Stand-in two-carbon system (kHz); not the measured malonic acid values."""
    return SpinSystem((2.0, -1.5), {(0, 1): 2.0}, {(0, 1): 0.05})


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the summary table."""

    def record(number, text):
        key = (number, request.node.name)
        ACCEPTANCE[key] = [text, "FAIL"]
        return ACCEPTANCE[key]

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        for (number, name), entry in ACCEPTANCE.items():
            if name == item.name:
                entry[1] = "PASS" if rep.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for (number, name), (text, status) in sorted(ACCEPTANCE.items()):
        terminalreporter.write_line(f"[{status}] criterion {number}: {text}")
