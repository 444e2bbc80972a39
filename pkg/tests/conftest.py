import numpy as np
import pytest

from reltoa import DetectorModel, make_gaussian_state

_LINES = []


@pytest.fixture
def record():
    """Log one acceptance line; they are repeated in the terminal summary."""
    def _record(label, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        print(line)
        _LINES.append(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def gauss():
    return make_gaussian_state(1.0, 0.05)


@pytest.fixture
def regular_detectors():
    return [DetectorModel("maximal"), DetectorModel("maximal", 0.5, 0.5),
            DetectorModel("covariant"), DetectorModel("ideal")]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
