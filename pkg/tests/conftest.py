import math

import pytest

from blockcorr.blockage import BlockageModel
from blockcorr.oned import NetworkParams1D
from blockcorr.pathloss import PathLossSpec
from blockcorr.twod import NetworkParams2D

# reference operating points: 10 BS/km with 7 blockages/km on a line,
# 30 BS/km^2 with beta = 0.014/m and Unif(0, 200 m) blockages in the plane
LAM_1D = 0.01
MU_1D = 0.007
LAM_2D = 3e-5
BETA_2D = 0.014
LMAX_2D = 200.0

_acceptance_lines: list[str] = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)
    print(line)


@pytest.fixture
def acceptance_line():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def p1d():
    return NetworkParams1D(LAM_1D, MU_1D)


@pytest.fixture(scope="session")
def p1d_lap():
    return NetworkParams1D(LAM_1D, LAM_1D, PathLossSpec.lap())


@pytest.fixture(scope="session")
def blockage2d():
    return BlockageModel.from_beta(BETA_2D, LMAX_2D)


@pytest.fixture(scope="session")
def p2d(blockage2d):
    return NetworkParams2D(LAM_2D, blockage2d)


@pytest.fixture(scope="session")
def p2d_lap(blockage2d):
    return NetworkParams2D(LAM_2D, blockage2d, PathLossSpec.lap())


def db(x):
    return 10.0 ** (x / 10.0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


__all__ = ["db", "rel", "record_acceptance", "math"]
