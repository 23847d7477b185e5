import numpy as np
import pytest

from mlc_lab.ldpc import parse_alist
from mlc_lab.sim import resolve_code

# 3x6 parity-check matrix whose columns are distinct nonzero 3-bit vectors
TOY_ALIST = """\
6 3
2 3
1 1 1 2 2 2
3 3 3
1 0
2 0
3 0
1 2
2 3
1 3
1 4 6
2 4 5
3 5 6
"""


@pytest.fixture(scope="session")
def toy_code():
    return parse_alist(TOY_ALIST, name="toy")


@pytest.fixture(scope="session")
def small_code():
    return resolve_code("r12_n1008.alist")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
