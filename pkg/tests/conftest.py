import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from delaynull import DelayKernel, find_roots  # noqa: E402
from delaynull.control import Horizon  # noqa: E402

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def zero_kernel():
    return DelayKernel.zero()


@pytest.fixture(scope="session")
def model_spectrum(zero_kernel):
    return find_roots(zero_kernel, range(-15, 16))


@pytest.fixture(scope="session")
def wide_spectrum(zero_kernel):
    """Covers R_6 = 1296 for the default schedule."""
    return find_roots(zero_kernel, range(-210, 211))


@pytest.fixture(scope="session")
def horizon():
    return Horizon(1.5)


@pytest.fixture
def record_acceptance():
    """Store the one-line verdict of an acceptance criterion for the summary."""
    def record(k, ok, detail):
        line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES[k] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
