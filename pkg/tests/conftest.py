import numpy as np
import pytest

from ncsim.galois import get_field


@pytest.fixture(params=[1, 4, 8], ids=lambda q: f"q{q}")
def small_field(request):
    return get_field(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
