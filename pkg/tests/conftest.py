import numpy as np
import pytest

from misofdma.config import reference_config
from misofdma.sim import run
from misofdma.verify import BoundMonitor

REPORT = []


@pytest.fixture(scope="session")
def reference_run():
    """The 20 000-slot reference scenario, shared by the slow checks."""
    monitor = BoundMonitor()
    trace = run(reference_config(), observer=monitor)
    return trace, monitor


@pytest.fixture
def report():
    def emit(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        REPORT.append(line)
        print(line)
        return ok
    return emit


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
