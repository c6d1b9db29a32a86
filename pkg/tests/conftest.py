import numpy as np
import pytest

from hybridsim.device import reference_device


@pytest.fixture(scope="session")
def device():
    return reference_device()


@pytest.fixture(scope="session")
def lossless_device():
    return reference_device(kappa=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_lines(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
