import numpy as np
import pytest

from subspace_perturb.stream import SeededStream

# acceptance results collected by test_acceptance and echoed in the summary
ACCEPTANCE_LINES = {}


@pytest.fixture
def stream():
    return SeededStream(20240601)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
