import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from wasep_lab.hydro import VectorFieldSpec
from wasep_lab.lattice import Torus

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running Monte Carlo or sweep test")
    config.addinivalue_line("markers", "acceptance: numbered acceptance criterion")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ring8():
    return Torus(1, 8)


@pytest.fixture
def ring32():
    return Torus(1, 32)


@pytest.fixture
def sine_field():
    return VectorFieldSpec.sine(1, 1.0)


@pytest.fixture
def cos_profile():
    def make(torus, rho=0.5, amp=0.2):
        return rho + amp * np.cos(2 * np.pi * torus.points()[:, 0])
    return make


# -- acceptance report ---------------------------------------------------------

_ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for a numbered acceptance criterion, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(_ACCEPTANCE_LINES[number])
