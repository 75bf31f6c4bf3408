import numpy as np
import pytest

from zmcsurf.geometry import SurfacePatch
from zmcsurf.grid import Grid
from zmcsurf.moore import MooreParams, moore_canonical_parameters, moore_surface

DEFAULT = MooreParams()


@pytest.fixture(scope="session")
def params():
    return DEFAULT


@pytest.fixture(scope="session")
def moore101():
    return moore_surface(DEFAULT, 101, 101)


@pytest.fixture(scope="session")
def canonical101():
    return moore_canonical_parameters(DEFAULT, 101, 101)


@pytest.fixture(scope="session")
def canonical201():
    return moore_canonical_parameters(DEFAULT, 201, 201)


def lorentz_plane(n=21):
    """z = (v, 0, 0, u): E = -1, F = 0, G = 1, totally geodesic."""
    grid = Grid(0.0, 1.0, 0.0, 1.0, n, n)
    U, V = grid.mesh()
    z = np.zeros((n, n, 4))
    z[..., 0] = V
    z[..., 3] = U
    zero = np.zeros_like(z)
    zu = np.zeros_like(z)
    zu[..., 3] = 1.0
    zv = np.zeros_like(z)
    zv[..., 0] = 1.0
    return SurfacePatch(z, grid, {"zu": zu, "zv": zv, "zuu": zero, "zuv": zero, "zvv": zero},
                        label="lorentz-plane")


@pytest.fixture
def plane():
    return lorentz_plane()


# -- acceptance reporting -------------------------------------------------------------

ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store one acceptance outcome; printed in the terminal summary."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
