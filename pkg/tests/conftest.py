from collections import namedtuple

import pytest

from eigengrad import eigensolve, fem, geometry

Solved = namedtuple("Solved", "mesh pencil spectrum")

ACCEPTANCE_LINES = []


def _solve(mesh, count=None, tol=1e-10):
    pencil = fem.assemble(mesh)
    if count is None:
        spec = eigensolve.solve_dense(pencil)
    else:
        spec = eigensolve.solve_lowest(pencil, count, tol=tol, seed=0)
    return Solved(mesh, pencil, spec)


@pytest.fixture(scope="session")
def torus32_dense():
    return _solve(geometry.make_flat_torus(32))


@pytest.fixture(scope="session")
def torus64_dense():
    return _solve(geometry.make_flat_torus(64))


@pytest.fixture(scope="session")
def torus128():
    # every lattice eigenvalue with |k|^2 <= 64
    return _solve(geometry.make_flat_torus(128), count=197, tol=1e-10)


@pytest.fixture(scope="session")
def sphere3_dense():
    return _solve(geometry.make_icosphere(3))


@pytest.fixture(scope="session")
def sphere4_dense():
    return _solve(geometry.make_icosphere(4))


@pytest.fixture(scope="session")
def sphere6():
    # l <= 10
    return _solve(geometry.make_icosphere(6), count=121, tol=1e-8)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)
