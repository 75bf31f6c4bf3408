"""Geometric frame, invariants and canonical parameters of a timelike ZMC patch.

At a non-flat point sigma(x, x) = sigma(y, y) = a e1 + b e2 and
sigma(x, y) = c e1 + d e2.  A hyperbolic rotation of the tangent frame by
phi with tanh(4 phi) = -2(ac + bd)/(a^2 + b^2 + c^2 + d^2) makes the two
normal vectors orthogonal; normalizing them gives n1, n2 and the invariants
nu = <sigma(x,x), n1>, mu = <sigma(x,y), n2>.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import grid as fd
from .errors import FlatPoint, NotSemiCanonical, NotZMC
from .geometry import (SurfacePatch, auto_normal_frame, derivatives, first_fundamental,
                       normal_frame_from_reference, sigma_field)
from .grid import Grid, GridField
from .minkowski import inner

ARTANH_GUARD = 1e-12
# relative tolerances for exact derivative arrays and for stencil derivatives
EXACT_TOL = 1e-6
STENCIL_TOL = 1e-2


def _default_tol(patch, method, tol):
    if tol is not None:
        return tol
    exact = method != "stencil" and patch.derivatives is not None
    return EXACT_TOL if exact else STENCIL_TOL


@dataclass
class SigmaComponents:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for k in "abcd":
            setattr(self, k, np.asarray(getattr(self, k), dtype=float))

    @property
    def scale(self):
        return self.a**2 + self.b**2 + self.c**2 + self.d**2

    @property
    def cross(self):
        """a c + b d, i.e. <sigma(x,x), sigma(x,y)>."""
        return self.a * self.c + self.b * self.d

    @property
    def det(self):
        return self.a * self.d - self.b * self.c


def rotate_sigma(s, phi):
    """Components after x' = cosh(phi) x + sinh(phi) y, y' = sinh(phi) x + cosh(phi) y."""
    ch, sh = np.cosh(2.0 * phi), np.sinh(2.0 * phi)
    return SigmaComponents(s.a * ch + s.c * sh, s.b * ch + s.d * sh,
                           s.a * sh + s.c * ch, s.b * sh + s.d * ch)


def diagonalizing_angle(s, guard=ARTANH_GUARD):
    """phi = artanh(A)/4 with A = -2(ac + bd)/(a^2 + b^2 + c^2 + d^2).

    Raises FlatPoint where |A| > 1 - guard (|A| < 1 holds strictly at non-flat points).
    """
    S = s.scale
    with np.errstate(invalid="ignore", divide="ignore"):
        A = np.where(S > 0, -2.0 * s.cross / np.where(S > 0, S, 1.0), np.nan)
    bad = ~(np.abs(A) <= 1.0 - guard)
    if np.any(bad):
        raise FlatPoint("sigma components are flat (|A| >= 1) at "
                        f"{int(np.count_nonzero(bad))} node(s)")
    return 0.25 * 0.5 * np.log((1.0 + A) / (1.0 - A))


@dataclass
class GeometricFrameSample:
    frame: np.ndarray       # (..., 4, 4) rows x, y, n1, n2
    nu: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    orientation: str = "nu>0, mu>0"

    @property
    def x(self):
        return self.frame[..., 0, :]

    @property
    def y(self):
        return self.frame[..., 1, :]

    @property
    def n1(self):
        return self.frame[..., 2, :]

    @property
    def n2(self):
        return self.frame[..., 3, :]


def _norm(w):
    return np.sqrt(np.maximum(inner(w, w), 0.0))


def geometric_frame(patch, reference=None, method="auto", zmc_tol=None, flat_tol=1e-10):
    """Geometric frame field and the invariants nu, mu of a timelike ZMC patch.

    ``zmc_tol`` bounds |sigma(x,x) - sigma(y,y)| relative to the size of sigma
    (NotZMC otherwise); by default 1e-6 with exact derivatives and 1e-2 with
    stencils, whose O(h^2) error shows up in the defect.  With ``reference``
    = (r1, r2) the signs of n1, n2 follow the normal projections of r1, r2
    and nu, mu carry signs; without it nu > 0 and mu > 0 at every node.
    """
    zmc_tol = _default_tol(patch, method, zmc_tol)
    s = sigma_field(patch, method)
    size = np.maximum(_norm(s.sxx), _norm(s.sxy))
    defect = _norm(s.sxx - s.syy)
    if np.any(defect > zmc_tol * size):
        worst = float(np.max(defect / np.where(size > 0, size, 1.0)))
        raise NotZMC(f"sigma(x,x) != sigma(y,y): relative defect {worst:.3e} > {zmc_tol:.1e}")
    sxx = 0.5 * (s.sxx + s.syy)
    if reference is not None:
        e1, e2 = normal_frame_from_reference(patch, reference, method)
    else:
        e1, e2 = auto_normal_frame(patch, method)
    comps = SigmaComponents(inner(sxx, e1), inner(sxx, e2), inner(s.sxy, e1), inner(s.sxy, e2))
    phi = diagonalizing_angle(comps)
    ch, sh = np.cosh(phi)[..., None], np.sinh(phi)[..., None]
    x = ch * s.x + sh * s.y
    y = sh * s.x + ch * s.y
    ch2, sh2 = np.cosh(2 * phi)[..., None], np.sinh(2 * phi)[..., None]
    bxx = ch2 * sxx + sh2 * s.sxy
    bxy = sh2 * sxx + ch2 * s.sxy
    nu, mu = _norm(bxx), _norm(bxy)
    if np.any(nu * mu <= flat_tol * (nu**2 + mu**2)):
        raise FlatPoint("nu * mu vanishes: point is flat")
    n1 = bxx / nu[..., None]
    n2 = bxy / mu[..., None]
    orientation = "nu>0, mu>0"
    if reference is not None:
        s1 = np.where(inner(n1, e1) < 0, -1.0, 1.0)
        s2 = np.where(inner(n2, e2) < 0, -1.0, 1.0)
        n1, nu = n1 * s1[..., None], nu * s1
        n2, mu = n2 * s2[..., None], mu * s2
        orientation = "n1, n2 aligned with reference"
    frame = np.stack([x, y, n1, n2], axis=-2)
    return GeometricFrameSample(frame, nu, mu, phi, orientation)


@dataclass
class InvariantField:
    grid: Grid
    E: np.ndarray
    G: np.ndarray
    nu: np.ndarray
    mu: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    sx: float = 1.0   # x = sx * z_u / sqrt(-E)
    sy: float = 1.0   # y = sy * z_v / sqrt(G)
    frame: np.ndarray | None = field(default=None, repr=False)

    @property
    def K(self):
        return self.nu**2 - self.mu**2

    @property
    def kappa(self):
        return -2.0 * self.nu * self.mu

    def field(self, name):
        return GridField(getattr(self, name), self.grid, name)

    def along_x(self, F):
        return self.sx * fd.d_u(F, self.grid) / np.sqrt(-self.E)

    def along_y(self, F):
        return self.sy * fd.d_v(F, self.grid) / np.sqrt(self.G)


def frame_invariants(patch, gf, method="auto", align_tol=None):
    """gamma1, gamma2, beta1, beta2 (plus E, G, nu, mu) in semi-canonical parameters.

    gamma1 = y(ln sqrt(-E)), gamma2 = -x(ln sqrt(G)),
    beta1 = <D'_x n1, n2>, beta2 = <D'_y n1, n2>, derivatives by stencils.
    """
    g = patch.grid
    align_tol = _default_tol(patch, method, align_tol)
    forms = first_fundamental(patch, method=method)
    d = derivatives(patch, method)
    mis = np.maximum(np.abs(inner(gf.x, d["zv"])) / np.sqrt(np.abs(forms.G)),
                     np.abs(inner(gf.y, d["zu"])) / np.sqrt(np.abs(forms.E)))
    if np.max(mis) > align_tol:
        raise NotSemiCanonical(
            f"parametric lines are not canonical: misalignment {np.max(mis):.3e}")
    sx = float(np.sign(np.median(-inner(gf.x, d["zu"]))))
    sy = float(np.sign(np.median(inner(gf.y, d["zv"]))))
    E, G = forms.E, forms.G
    sE, sG = np.sqrt(-E), np.sqrt(G)
    gamma1 = sy * fd.d_v(np.log(sE), g) / sG
    gamma2 = -sx * fd.d_u(np.log(sG), g) / sE
    beta1 = sx * inner(fd.d_u(gf.n1, g), gf.n2) / sE
    beta2 = sy * inner(fd.d_v(gf.n1, g), gf.n2) / sG
    return InvariantField(g, E, G, gf.nu, gf.mu, gamma1, gamma2, beta1, beta2, sx, sy, gf.frame)


def _nested_terms(inv):
    """x(gamma2), y(gamma1), x(beta2), y(beta1) by product rules.

    Differencing a field that was itself differenced along the same axis loses
    an order next to the boundary, so the nested derivatives are expanded into
    direct second-derivative stencils of E, G and the normal frame.
    """
    g = inv.grid
    sE, sG = np.sqrt(-inv.E), np.sqrt(inv.G)
    lE, lG = np.log(sE), np.log(sG)
    x_g2 = -(fd.d_uu(lG, g) / sE - fd.d_u(lG, g) * fd.d_u(sE, g) / sE**2) / sE
    y_g1 = (fd.d_vv(lE, g) / sG - fd.d_v(lE, g) * fd.d_v(sG, g) / sG**2) / sG
    if inv.frame is None:
        return x_g2, y_g1, inv.along_x(inv.beta2), inv.along_y(inv.beta1)
    n1, n2 = inv.frame[..., 2, :], inv.frame[..., 3, :]
    n1u, n1v, n2u, n2v = fd.d_u(n1, g), fd.d_v(n1, g), fd.d_u(n2, g), fd.d_v(n2, g)
    n1uv = inner(fd.d_uv(n1, g), n2)
    w_u, w_v = inner(n1u, n2), inner(n1v, n2)
    s = inv.sx * inv.sy
    x_b2 = s * ((n1uv + inner(n1v, n2u)) / sG - w_v * fd.d_u(sG, g) / sG**2) / sE
    y_b1 = s * ((n1uv + inner(n1u, n2v)) / sE - w_u * fd.d_v(sE, g) / sE**2) / sG
    return x_g2, y_g1, x_b2, y_b1


def structure_equation_residuals(inv):
    """Residuals of the six Gauss-Codazzi-Ricci relations among the invariants."""
    nu, mu = inv.nu, inv.mu
    g1, g2, b1, b2 = inv.gamma1, inv.gamma2, inv.beta1, inv.beta2
    X, Y = inv.along_x, inv.along_y
    x_g2, y_g1, x_b2, y_b1 = _nested_terms(inv)
    res = [
        2 * mu * g2 + nu * b2 - X(mu),
        -2 * mu * g1 + nu * b1 - Y(mu),
        2 * nu * g2 - mu * b2 - X(nu),
        -2 * nu * g1 - mu * b1 - Y(nu),
        nu**2 - mu**2 - (x_g2 + y_g1 + g1**2 - g2**2),
        2 * nu * mu - (x_b2 - y_b1 - g1 * b1 - g2 * b2),
    ]
    return [GridField(r, inv.grid, f"S{k + 1}") for k, r in enumerate(res)]


def _resample_axis(values, old, new, axis):
    return CubicSpline(old, values, axis=axis)(new)


@dataclass
class Reparametrization:
    patch: SurfacePatch
    invariants: InvariantField
    u_bar: np.ndarray   # canonical coordinate of the old u-nodes
    v_bar: np.ndarray
    cross_variation: float


def canonical_reparametrization(patch, inv, tol=1e-6, zmc_tol=None, align_tol=None):
    """Change semi-canonical (u, v) into canonical parameters.

    phi(u) = -E sqrt(mu^2 + nu^2) and psi(v) = G sqrt(mu^2 + nu^2) must not
    depend on v resp. u (relative cross-variation below ``tol``); then
    u_bar = int sqrt(phi) du and v_bar = int sqrt(psi) dv by the cumulative
    trapezoid rule.  The patch is resampled on a uniform (u_bar, v_bar) grid
    with cubic splines and its invariants are recomputed there.
    """
    g = patch.grid
    rho = np.sqrt(inv.mu**2 + inv.nu**2)
    phi = -inv.E * rho
    psi = inv.G * rho
    cv_phi = np.max((phi.max(axis=1) - phi.min(axis=1)) / np.abs(phi.mean(axis=1)))
    cv_psi = np.max((psi.max(axis=0) - psi.min(axis=0)) / np.abs(psi.mean(axis=0)))
    cross = float(max(cv_phi, cv_psi))
    if cross > tol:
        raise NotSemiCanonical(f"E*sqrt(mu^2+nu^2) or G*sqrt(mu^2+nu^2) varies across "
                               f"parametric lines (relative {cross:.3e} > {tol:.1e})")
    ub = fd.cumtrapz(np.sqrt(phi.mean(axis=1)), g.h_u)
    vb = fd.cumtrapz(np.sqrt(psi.mean(axis=0)), g.h_v)
    new_grid = Grid(0.0, float(ub[-1]), 0.0, float(vb[-1]), g.n_u, g.n_v)
    u_new = CubicSpline(ub, g.u)(new_grid.u)
    v_new = CubicSpline(vb, g.v)(new_grid.v)
    pos = _resample_axis(patch.positions, g.u, u_new, 0)
    pos = _resample_axis(pos, g.v, v_new, 1)
    new_patch = SurfacePatch(pos, new_grid, None, label=(patch.label + "+canonical").lstrip("+"))
    reference = None
    if inv.frame is not None:
        ref = _resample_axis(_resample_axis(inv.frame[..., 2:, :], g.u, u_new, 0), g.v, v_new, 1)
        reference = (ref[..., 0, :], ref[..., 1, :])
    gf = geometric_frame(new_patch, reference, method="stencil", zmc_tol=zmc_tol)
    new_inv = frame_invariants(new_patch, gf, method="stencil", align_tol=align_tol)
    return Reparametrization(new_patch, new_inv, ub, vb, cross)
