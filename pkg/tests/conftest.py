import math

import pytest

from qp_tongues import ClassifierPolicy

TWO_PI = 2.0 * math.pi


@pytest.fixture
def desk():
    return ClassifierPolicy.desk()


@pytest.fixture
def reference():
    return ClassifierPolicy.reference()


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def report(request):
    """Record (and print) one pass/fail line for an acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
