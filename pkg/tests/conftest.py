import warnings

import pytest

from fitted_bvp import MeshParams, build_mesh, make_example1, make_example2


@pytest.fixture
def ex1():
    return make_example1()


@pytest.fixture
def ex2():
    return make_example2()


def quiet_mesh(eps, N, p=0.4, a=1.0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_mesh(MeshParams(eps, p, a, N))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
