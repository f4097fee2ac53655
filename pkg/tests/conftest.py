import numpy as np
import pytest

from opsys.tuples import RationalAngle, standard_pair


@pytest.fixture
def F():
    """The anti-commuting pair diag(1, -1), [[0, 1], [1, 0]]."""
    return standard_pair(RationalAngle(1, 2))


@pytest.fixture
def s31():
    return standard_pair(RationalAngle(1, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
