import numpy as np
import pytest

import areavar as av

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(name, ok, detail):
    line = f"[{name}] {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def holo_grid():
    return av.SurfaceGrid(av.make_surface("t4-holomorphic"), 32)


@pytest.fixture(scope="session")
def tilted_grid():
    return av.SurfaceGrid(av.make_surface("t4-tilted-3-4-5"), 32)


@pytest.fixture(scope="session")
def clifford_grid():
    return av.SurfaceGrid(av.make_surface("cp2-clifford"), 24)


@pytest.fixture(scope="session")
def circle_grid():
    return av.SurfaceGrid(av.make_surface("c2-circle-product"), 32)


@pytest.fixture(scope="session")
def perturbed_grid():
    return av.SurfaceGrid(av.make_surface("t4-perturbed"), (24, 36))


@pytest.fixture(scope="session")
def squeezed_grid():
    return av.SurfaceGrid(av.make_surface("t4-squeezed"), 32)


def random_points(rng, n, dim, scale=0.4):
    """Sample chart points in a ball where every model is comfortable."""
    return scale * rng.standard_normal((n, dim))
