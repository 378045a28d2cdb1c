import numpy as np
import pytest
from hypothesis import settings

from boxtherm.mesh import build_mesh, generate_structured_mesh

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def square2():
    """Unit square split along the (0,0)-(1,1) diagonal."""
    v = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    t = np.array([[0, 1, 2], [0, 2, 3]])
    return build_mesh(v, t)


@pytest.fixture
def mesh_n2():
    return generate_structured_mesh(2)
