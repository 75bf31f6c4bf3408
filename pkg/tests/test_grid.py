import numpy as np
import pytest

from zmcsurf import grid as fd
from zmcsurf.errors import GridTooSmall, ValidationError
from zmcsurf.grid import Grid, GridField, observed_order, residual_stats


def _grid(n):
    return Grid(0.0, 1.0, 0.0, 1.0, n, n)


def test_grid_geometry():
    g = Grid(0.0, 2.0, -1.0, 1.0, 5, 3)
    assert g.h_u == 0.5 and g.h_v == 1.0
    assert np.allclose(g.u, [0, 0.5, 1, 1.5, 2])
    assert g.refined().shape == (9, 5)
    assert g.as_dict()["n_u"] == 5


def test_grid_validation():
    with pytest.raises(ValidationError):
        Grid(0.0, 1.0, 0.0, 1.0, 0, 3)
    with pytest.raises(ValidationError):
        Grid(1.0, 0.0, 0.0, 1.0, 3, 3)
    with pytest.raises(ValidationError):
        GridField(np.zeros((3, 4)), Grid(0.0, 1.0, 0.0, 1.0, 3, 3))


def test_stencils_exact_on_quadratics():
    g = _grid(7)
    U, V = g.mesh()
    F = 3 * U**2 - 2 * U * V + V**2 + U - 4
    assert np.allclose(fd.d_u(F, g), 6 * U - 2 * V + 1, atol=1e-12)
    assert np.allclose(fd.d_v(F, g), -2 * U + 2 * V, atol=1e-12)
    assert np.allclose(fd.d_uu(F, g), 6.0, atol=1e-9)
    assert np.allclose(fd.d_vv(F, g), 2.0, atol=1e-9)
    assert np.allclose(fd.d_uv(F, g), -2.0, atol=1e-9)


@pytest.mark.parametrize("order", [2, 4])
def test_first_derivative_order(order):
    errs = []
    for n in (21, 41, 81):
        g = _grid(n)
        U, _ = g.mesh()
        errs.append(np.max(np.abs(fd.d1(np.sin(3 * U), g.h_u, 0, order) - 3 * np.cos(3 * U))))
    for a, b in zip(errs, errs[1:]):
        assert observed_order(a, b) == pytest.approx(order, abs=0.3)


def test_second_derivative_order():
    errs = []
    for n in (21, 41, 81):
        g = _grid(n)
        _, V = g.mesh()
        errs.append(np.max(np.abs(fd.d_vv(np.exp(V), g) - np.exp(V))))
    assert observed_order(errs[1], errs[2]) == pytest.approx(2.0, abs=0.3)


def test_small_grids_rejected():
    with pytest.raises(GridTooSmall):
        fd.d1(np.zeros((2, 5)), 0.1, 0)
    with pytest.raises(GridTooSmall):
        fd.d1(np.zeros((4, 5)), 0.1, 0, order=4)
    with pytest.raises(GridTooSmall):
        fd.d2(np.zeros((5, 3)), 0.1, 1)


def test_d1_carries_trailing_axes():
    g = _grid(11)
    U, _ = g.mesh()
    F = np.stack([U, 2 * U, U**2, 0 * U], axis=-1)
    out = fd.d_u(F, g)
    assert out.shape == F.shape
    assert np.allclose(out[..., 1], 2.0)
    assert np.allclose(fd.d1(F, g.h_u, 0, order=4)[..., 2], 2 * U)


def test_unwrap_phase_removes_jumps():
    g = _grid(41)
    U, V = g.mesh()
    theta = 6 * U + 5 * V
    wrapped = np.angle(np.exp(1j * theta))
    out = fd.unwrap_phase(wrapped)
    assert np.allclose(out - out[0, 0], theta - theta[0, 0], atol=1e-12)


def test_cumtrapz_on_linear():
    x = np.linspace(0, 2, 11)
    assert np.allclose(fd.cumtrapz(2 * x, x[1] - x[0]), x**2)


def test_residual_stats_excludes_ring():
    a = np.zeros((5, 5))
    a[0, 0] = 100.0
    a[2, 2] = -3.0
    assert residual_stats(a) == {"max": 3.0, "mean": 3.0 / 9, "count": 9}
    assert residual_stats(a, ring=2)["count"] == 1
