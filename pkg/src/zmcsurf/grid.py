"""Uniform rectangular grids, sampled fields and finite-difference stencils.

Axis 0 of every array is u, axis 1 is v.  Derivative stencils are central
second order in the interior and second-order one-sided on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooSmall, ValidationError


@dataclass(frozen=True)
class Grid:
    u_min: float
    u_max: float
    v_min: float
    v_max: float
    n_u: int
    n_v: int

    def __post_init__(self):
        if self.n_u < 1 or self.n_v < 1:
            raise ValidationError("grid needs at least one node per axis")
        if (self.n_u > 1 and not self.u_max > self.u_min) or (
                self.n_v > 1 and not self.v_max > self.v_min):
            raise ValidationError("grid extents must be increasing")

    @property
    def shape(self):
        return (self.n_u, self.n_v)

    @property
    def h_u(self):
        return (self.u_max - self.u_min) / (self.n_u - 1) if self.n_u > 1 else 0.0

    @property
    def h_v(self):
        return (self.v_max - self.v_min) / (self.n_v - 1) if self.n_v > 1 else 0.0

    @property
    def u(self):
        return self.u_min + np.arange(self.n_u) * self.h_u

    @property
    def v(self):
        return self.v_min + np.arange(self.n_v) * self.h_v

    def mesh(self):
        return np.meshgrid(self.u, self.v, indexing="ij")

    def refined(self, factor=2):
        return Grid(self.u_min, self.u_max, self.v_min, self.v_max,
                    factor * (self.n_u - 1) + 1, factor * (self.n_v - 1) + 1)

    def as_dict(self):
        return {"n_u": int(self.n_u), "n_v": int(self.n_v), "u_min": float(self.u_min),
                "u_max": float(self.u_max), "v_min": float(self.v_min),
                "v_max": float(self.v_max)}


@dataclass
class GridField:
    values: np.ndarray
    grid: Grid
    name: str = field(default="value")

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[:2] != self.grid.shape:
            raise ValidationError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    @property
    def h_u(self):
        return self.grid.h_u

    @property
    def h_v(self):
        return self.grid.h_v

    def interior(self):
        return self.values[1:-1, 1:-1]

    def stats(self):
        return residual_stats(self.values)


def residual_stats(values, ring=1):
    """(max |r|, mean |r|, count) over interior nodes, excluding a boundary ring."""
    a = np.abs(np.asarray(values))
    inner_vals = a[ring:a.shape[0] - ring, ring:a.shape[1] - ring] if ring else a
    inner_vals = inner_vals[np.isfinite(inner_vals)]
    if inner_vals.size == 0:
        return {"max": 0.0, "mean": 0.0, "count": 0}
    return {"max": float(inner_vals.max()), "mean": float(inner_vals.mean()),
            "count": int(inner_vals.size)}


def interior_max(values, ring=1):
    a = np.abs(np.asarray(values))
    if ring:
        a = a[ring:-ring, ring:-ring]
    return float(np.nanmax(a))


def d1(F, h, axis, order=2):
    """First derivative along ``axis``; extra trailing axes are carried along.

    ``order=4`` uses the five-point central stencil with five-point one-sided
    stencils on the two outer nodes at each end.
    """
    F = np.asarray(F, dtype=float)
    if order == 2:
        if F.shape[axis] < 3:
            raise GridTooSmall("first-derivative stencil needs at least 3 nodes")
        return np.gradient(F, h, axis=axis, edge_order=2)
    if order != 4:
        raise ValueError("order must be 2 or 4")
    if F.shape[axis] < 5:
        raise GridTooSmall("fourth-order stencil needs at least 5 nodes")
    Fm = np.moveaxis(F, axis, 0)
    out = np.empty_like(Fm)
    out[2:-2] = (Fm[:-4] - 8 * Fm[1:-3] + 8 * Fm[3:-1] - Fm[4:]) / 12
    out[0] = (-25 * Fm[0] + 48 * Fm[1] - 36 * Fm[2] + 16 * Fm[3] - 3 * Fm[4]) / 12
    out[1] = (-3 * Fm[0] - 10 * Fm[1] + 18 * Fm[2] - 6 * Fm[3] + Fm[4]) / 12
    out[-1] = -(-25 * Fm[-1] + 48 * Fm[-2] - 36 * Fm[-3] + 16 * Fm[-4] - 3 * Fm[-5]) / 12
    out[-2] = -(-3 * Fm[-1] - 10 * Fm[-2] + 18 * Fm[-3] - 6 * Fm[-4] + Fm[-5]) / 12
    return np.moveaxis(out / h, 0, axis)


def d2(F, h, axis):
    """Second derivative along ``axis`` (3-point interior, 4-point one-sided ends)."""
    F = np.moveaxis(np.asarray(F, dtype=float), axis, 0)
    n = F.shape[0]
    if n < 4:
        raise GridTooSmall("second-derivative stencil needs at least 4 nodes")
    out = np.empty_like(F)
    out[1:-1] = (F[2:] - 2.0 * F[1:-1] + F[:-2]) / h**2
    out[0] = (2.0 * F[0] - 5.0 * F[1] + 4.0 * F[2] - F[3]) / h**2
    out[-1] = (2.0 * F[-1] - 5.0 * F[-2] + 4.0 * F[-3] - F[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def d_u(F, grid):
    return d1(F, grid.h_u, 0)


def d_v(F, grid):
    return d1(F, grid.h_v, 1)


def d_uu(F, grid):
    return d2(F, grid.h_u, 0)


def d_vv(F, grid):
    return d2(F, grid.h_v, 1)


def d_uv(F, grid):
    return d1(d1(F, grid.h_u, 0), grid.h_v, 1)


def unwrap_phase(theta, anchor_column=0):
    """Remove 2*pi jumps: unwrap each row along v, then stitch rows on the anchor column."""
    theta = np.unwrap(np.asarray(theta, dtype=float), axis=1)
    col = theta[:, anchor_column]
    shift = np.unwrap(col) - col
    return theta + shift[:, None]


def cumtrapz(y, h, axis=0):
    """Cumulative trapezoid rule starting at zero."""
    y = np.moveaxis(np.asarray(y, dtype=float), axis, 0)
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]), axis=0)
    return np.moveaxis(out, 0, axis)


def observed_order(err_coarse, err_fine, factor=2.0):
    return float(np.log(err_coarse / err_fine) / np.log(factor))
