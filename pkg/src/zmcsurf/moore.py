"""Rotational surfaces of Moore type and the timelike ZMC family M2.

The ZMC meridian is represented in closed form as f(g); the arclength
parameter u (gauge g'^2 - f'^2 = 1, g increasing) is recovered by
integrating dg/du = g'(g).  Everything downstream (patches, invariants,
canonical parameters) is evaluated from these closed forms, so this module
is the source of golden data for the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from .errors import TurningPoint, ValidationError
from .geometry import SurfacePatch
from .grid import Grid, GridField
from .natural_pde import CauchyData, to_XY


@dataclass(frozen=True)
class MooreParams:
    alpha: float = 1.0
    beta: float = 2.0
    A: float = 1.0
    C: float = 0.0
    eps: int = 1
    g_range: tuple = (0.7, 1.0)

    def validate(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValidationError("alpha and beta must be positive")
        if self.alpha == self.beta:
            raise ValidationError("alpha must differ from beta")
        if not self.A > 0:
            raise ValidationError("A must be positive")
        if self.eps not in (1, -1):
            raise ValidationError("eps must be +1 or -1")
        g0, g1 = self.g_range
        if not (0 < g0 < g1):
            raise ValidationError("g_range must satisfy 0 < g_min < g_max")
        return self

    @property
    def c(self):
        """Constant c > 0 with c^2 = A (alpha^2 + beta^2)."""
        return float(np.sqrt(self.A * (self.alpha**2 + self.beta**2)))

    def as_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "A": self.A, "C": self.C,
                "eps": self.eps, "g_range": list(self.g_range)}


@dataclass
class MeridianSample:
    u: np.ndarray
    f: np.ndarray
    g: np.ndarray
    fp: np.ndarray
    gp: np.ndarray
    fpp: np.ndarray
    gpp: np.ndarray

    def gauge_defect(self):
        return np.abs(self.gp**2 - self.fp**2 - 1.0)


@dataclass
class GeneralMeridian:
    """Curve x(u) in R^4_1 with optional first and second derivatives, shape (n, 4)."""

    u: np.ndarray
    x: np.ndarray
    xd: np.ndarray | None = None
    xdd: np.ndarray | None = None
    eps: int = -1

    def speed_defect(self):
        if self.xd is None:
            raise ValueError("meridian has no derivative samples")
        xd = self.xd
        q = xd[:, 0]**2 + xd[:, 1]**2 + xd[:, 2]**2 - xd[:, 3]**2
        return np.abs(q - self.eps)


# -- closed-form meridian ---------------------------------------------------

def _angle(g, p):
    return p.eps * p.alpha / p.beta * np.log(np.abs(p.beta * g + np.sqrt(p.beta**2 * g**2 + p.A))) + p.C


def meridian_closed_form(g, p):
    """f(g) = sqrt(A)/alpha * sin(eps alpha/beta * ln|beta g + sqrt(beta^2 g^2 + A)| + C)."""
    return np.sqrt(p.A) / p.alpha * np.sin(_angle(np.asarray(g, dtype=float), p))


def _gp_of_g(g, p):
    f = meridian_closed_form(g, p)
    D = p.alpha**2 * f**2 + p.beta**2 * g**2
    return np.sqrt((p.A + p.beta**2 * g**2) / D)


def meridian_state(g, p, u=None):
    """Arclength-gauge derivatives of the closed-form meridian at parameter values g."""
    g = np.asarray(g, dtype=float)
    a2, b2 = p.alpha**2, p.beta**2
    phi = _angle(g, p)
    s = p.A + b2 * g**2
    f = np.sqrt(p.A) / p.alpha * np.sin(phi)
    D = a2 * f**2 + b2 * g**2
    gp = np.sqrt(s / D)
    fp = p.eps * np.sqrt(p.A) * np.cos(phi) / np.sqrt(s) * gp
    Du = 2.0 * (a2 * f * fp + b2 * g * gp)
    fpp = -a2 * f / D - fp * Du / (2.0 * D)
    gpp = b2 * g / D - gp * Du / (2.0 * D)
    if u is None:
        u = np.full_like(g, np.nan)
    return MeridianSample(np.asarray(u, dtype=float), f, g, fp, gp, fpp, gpp)


def arclength_of_g(g, p):
    """u(g) = integral from g_min of dg / g'(g)."""
    g0 = p.g_range[0]
    return np.array([quad(lambda t: 1.0 / _gp_of_g(t, p), g0, gi,
                          epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                     for gi in np.atleast_1d(g)])


def _canonical_rate(g, p):
    # du_bar/dg = sqrt(c) / (sqrt(G) g'),  G = alpha^2 f^2 + beta^2 g^2
    f = meridian_closed_form(g, p)
    G = p.alpha**2 * f**2 + p.beta**2 * g**2
    return np.sqrt(p.c) / (np.sqrt(G) * _gp_of_g(g, p))


def canonical_of_g(g, p):
    """u_bar(g) = sqrt(c) * integral of du / sqrt(G), starting at g_min."""
    g0 = p.g_range[0]
    return np.array([quad(lambda t: _canonical_rate(t, p), g0, gi,
                          epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                     for gi in np.atleast_1d(g)])


def _invert(rate, targets, g0):
    """Solve dg/dt = rate(g) from g(0) = g0 and sample at ``targets``."""
    targets = np.asarray(targets, dtype=float)
    if targets.size == 1 and targets[0] == 0.0:
        return np.array([g0])
    sol = solve_ivp(lambda t, y: rate(y), (0.0, float(targets[-1])), [g0],
                    method="DOP853", t_eval=targets, rtol=1e-13, atol=1e-14)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[0]


def g_at_u(u, p):
    return _invert(lambda g: _gp_of_g(g, p), u, p.g_range[0])


def g_at_canonical(ubar, p):
    return _invert(lambda g: 1.0 / _canonical_rate(g, p), ubar, p.g_range[0])


# -- ODE route --------------------------------------------------------------

def _ode_rhs(f, g, p, f_sign, g_sign):
    a2, b2 = p.alpha**2, p.beta**2
    D = a2 * f**2 + b2 * g**2
    fp2 = max(p.A - a2 * f**2, 0.0) / D
    gp2 = (p.A + b2 * g**2) / D
    return f_sign * np.sqrt(fp2), g_sign * np.sqrt(gp2)


def meridian_ode_solve(p, g0, f0, length, n_steps=1000, direction=1, f_sign=1,
                       turning_tol=1e-10):
    """Integrate the meridian system in the arclength gauge with classic RK4.

    f'^2 = (A - alpha^2 f^2)/D, g'^2 = (A + beta^2 g^2)/D, D = alpha^2 f^2 + beta^2 g^2.
    ``direction`` is the sign of g', ``f_sign`` the sign of f' at the start.
    Raises TurningPoint (with the partial trajectory) once A - alpha^2 f^2
    drops below ``turning_tol``.
    """
    p.validate()
    if p.A - p.alpha**2 * f0**2 <= 0:
        raise ValidationError("initial point violates A - alpha^2 f0^2 > 0")
    h = length / n_steps
    f = np.empty(n_steps + 1)
    g = np.empty(n_steps + 1)
    f[0], g[0] = f0, g0

    def rhs(y):
        return np.array(_ode_rhs(y[0], y[1], p, f_sign, direction))

    for k in range(n_steps):
        y = np.array([f[k], g[k]])
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        f[k + 1], g[k + 1] = y
        if p.A - p.alpha**2 * y[0]**2 < turning_tol:
            partial = _ode_sample(p, np.arange(k + 2) * h, f[:k + 2], g[:k + 2],
                                  f_sign, direction)
            raise TurningPoint(f"f' vanishes near u = {(k + 1) * h:.6g}", partial)
    return _ode_sample(p, np.arange(n_steps + 1) * h, f, g, f_sign, direction)


def _ode_sample(p, u, f, g, f_sign, g_sign):
    a2, b2 = p.alpha**2, p.beta**2
    D = a2 * f**2 + b2 * g**2
    fp = f_sign * np.sqrt(np.maximum(p.A - a2 * f**2, 0.0) / D)
    gp = g_sign * np.sqrt((p.A + b2 * g**2) / D)
    Du = 2.0 * (a2 * f * fp + b2 * g * gp)
    fpp = -a2 * f / D - fp * Du / (2.0 * D)
    gpp = b2 * g / D - gp * Du / (2.0 * D)
    return MeridianSample(u, f, g, fp, gp, fpp, gpp)


def first_integral_defect(m, p):
    """|alpha^2 f^2 g'^2 + beta^2 g^2 f'^2 - A| along a meridian sample."""
    return np.abs(p.alpha**2 * m.f**2 * m.gp**2 + p.beta**2 * m.g**2 * m.fp**2 - p.A)


def minimal_condition_residual(m, p):
    """Residual of the ZMC condition on the meridian (both sides of the identity)."""
    a2, b2 = p.alpha**2, p.beta**2
    lhs = -(m.gp * m.fpp - m.fp * m.gpp) / (m.gp**2 - m.fp**2)
    rhs = (a2 * m.f * m.gp + b2 * m.g * m.fp) / (a2 * m.f**2 + b2 * m.g**2)
    return lhs - rhs


def calibrate_C(p, g0, f0):
    """Integration constant C making the closed form pass through (g0, f0) (principal arcsin)."""
    base = p.eps * p.alpha / p.beta * np.log(abs(p.beta * g0 + np.sqrt(p.beta**2 * g0**2 + p.A)))
    return float(np.arcsin(p.alpha * f0 / np.sqrt(p.A)) - base)


# -- rotation ---------------------------------------------------------------

def _rotation_stack(alpha, beta, v):
    """R(v), R'(v), R''(v) for trigonometric mixing in (x1,x2) and boost in (x3,x4)."""
    n = v.size
    R = np.zeros((3, n, 4, 4))
    ca, sa = np.cos(alpha * v), np.sin(alpha * v)
    cb, sb = np.cosh(beta * v), np.sinh(beta * v)
    for k, (c1, s1, c2, s2) in enumerate((
            (ca, sa, cb, sb),
            (-alpha * sa, alpha * ca, beta * sb, beta * cb),
            (-alpha**2 * ca, -alpha**2 * sa, beta**2 * cb, beta**2 * sb))):
        R[k, :, 0, 0] = c1
        R[k, :, 0, 1] = -s1
        R[k, :, 1, 0] = s1
        R[k, :, 1, 1] = c1
        R[k, :, 2, 2] = c2
        R[k, :, 2, 3] = s2
        R[k, :, 3, 2] = s2
        R[k, :, 3, 3] = c2
    return R


def moore_rotate(m, alpha, beta, grid):
    """Moore-type rotation of a sampled meridian over the v-nodes of ``grid``."""
    if m.x.shape != (grid.n_u, 4):
        raise ValueError("meridian must be sampled on the u-nodes of the grid")
    R, Rd, Rdd = _rotation_stack(alpha, beta, grid.v)
    rot = lambda M, w: np.einsum("jab,ib->ija", M, w)  # noqa: E731
    z = rot(R, m.x)
    derivs = None
    if m.xd is not None and m.xdd is not None:
        derivs = {"zu": rot(R, m.xd), "zv": rot(Rd, m.x), "zuu": rot(R, m.xdd),
                  "zuv": rot(Rd, m.xd), "zvv": rot(Rdd, m.x)}
    return SurfacePatch(z, grid, derivs, label="moore")


def _meridian_vectors(ms):
    z = np.zeros_like(ms.f)
    x = np.stack([ms.f, z, z, ms.g], axis=-1)
    xd = np.stack([ms.fp, z, z, ms.gp], axis=-1)
    xdd = np.stack([ms.fpp, z, z, ms.gpp], axis=-1)
    return x, xd, xdd


@dataclass
class MooreSurface:
    params: MooreParams
    patch: SurfacePatch
    meridian: MeridianSample


def moore_surface(p, n_u=101, n_v=101, v_range=(0.0, 1.0)):
    """ZMC Moore surface in the arclength gauge with exact derivative arrays."""
    p.validate()
    U = float(arclength_of_g(p.g_range[1], p)[0])
    grid = Grid(0.0, U, v_range[0], v_range[1], n_u, n_v)
    g = g_at_u(grid.u, p)
    ms = meridian_state(g, p, grid.u)
    x, xd, xdd = _meridian_vectors(ms)
    patch = moore_rotate(GeneralMeridian(grid.u, x, xd, xdd, eps=-1), p.alpha, p.beta, grid)
    return MooreSurface(p, patch, ms)


def zmc_moore_patch(p, n_u=101, n_v=101, v_range=(0.0, 1.0)):
    return moore_surface(p, n_u, n_v, v_range).patch


def moore_normal_frame(p, ms, v):
    """Normal frame (n1, n2) of M2 evaluated on the grid (ms on u-nodes, v array)."""
    av, bv = p.alpha * v[None, :], p.beta * v[None, :]
    f, g, fp, gp = (a[:, None] for a in (ms.f, ms.g, ms.fp, ms.gp))
    s1 = np.sqrt(gp**2 - fp**2)
    s2 = np.sqrt(p.alpha**2 * f**2 + p.beta**2 * g**2)
    n1 = np.stack([gp * np.cos(av), gp * np.sin(av), fp * np.sinh(bv), fp * np.cosh(bv)],
                  axis=-1) / s1[..., None]
    n2 = np.stack([p.beta * g * np.sin(av), -p.beta * g * np.cos(av),
                   p.alpha * f * np.cosh(bv), p.alpha * f * np.sinh(bv)],
                  axis=-1) / s2[..., None]
    return n1, n2


def invariants_from_meridian(ms, p):
    a2, b2 = p.alpha**2, p.beta**2
    G = a2 * ms.f**2 + b2 * ms.g**2
    E = ms.fp**2 - ms.gp**2
    root = np.sqrt(ms.gp**2 - ms.fp**2)
    nu = -(a2 * ms.f * ms.gp + b2 * ms.g * ms.fp) / (root * G)
    mu = p.alpha * p.beta * (ms.gp * ms.f - ms.fp * ms.g) / (root * G)
    return {"nu": nu, "mu": mu, "K": nu**2 - mu**2, "kappa": -2.0 * nu * mu, "E": E, "G": G,
            "conservation": (mu**2 + nu**2) * G**2 - p.c**2}


def moore_invariants(p, u=None, g=None):
    """Closed-form nu, mu, K, kappa, E, G at arclength parameters u (or meridian values g)."""
    p.validate()
    if (u is None) == (g is None):
        raise ValueError("give exactly one of u or g")
    if g is None:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        g = g_at_u(u, p)
    return invariants_from_meridian(meridian_state(np.atleast_1d(g), p, u), p)


@dataclass
class CanonicalMoore:
    params: MooreParams
    patch: SurfacePatch
    meridian: MeridianSample
    fields: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.patch.grid


def moore_canonical_parameters(p, n_u=101, n_v=101, v_range=(0.0, 1.0)):
    """M2 re-sampled on a uniform grid of canonical parameters (u_bar, v_bar).

    u_bar = sqrt(c) * int_0^u du / sqrt(G), v_bar = sqrt(c) v.  The patch
    carries exact derivatives by the chain rule; ``fields`` holds mu, nu, K,
    kappa, X, Y as GridFields on the canonical grid.
    """
    p.validate()
    sc = np.sqrt(p.c)
    Ub = float(canonical_of_g(p.g_range[1], p)[0])
    grid = Grid(0.0, Ub, sc * v_range[0], sc * v_range[1], n_u, n_v)
    g = g_at_canonical(grid.u, p)
    ms = meridian_state(g, p)
    G = p.alpha**2 * ms.f**2 + p.beta**2 * ms.g**2
    Gu = 2.0 * (p.alpha**2 * ms.f * ms.fp + p.beta**2 * ms.g * ms.gp)
    du = np.sqrt(G) / sc          # du/du_bar
    ddu = Gu / (2.0 * p.c)        # d^2u/du_bar^2
    v = grid.v / sc
    x, xd, xdd = _meridian_vectors(ms)
    R, Rd, Rdd = _rotation_stack(p.alpha, p.beta, v)
    rot = lambda M, w: np.einsum("jab,ib->ija", M, w)  # noqa: E731
    z = rot(R, x)
    zu, zv = rot(R, xd), rot(Rd, x)
    zuu, zuv, zvv = rot(R, xdd), rot(Rd, xd), rot(Rdd, x)
    a = du[:, None, None]
    derivs = {"zu": zu * a, "zv": zv / sc,
              "zuu": zuu * a**2 + zu * ddu[:, None, None],
              "zuv": zuv * a / sc, "zvv": zvv / p.c}
    patch = SurfacePatch(z, grid, derivs, label="moore-canonical")
    inv = invariants_from_meridian(ms, p)
    ones = np.ones(grid.n_v)
    fields = {k: GridField(np.outer(inv[k], ones), grid, k) for k in ("mu", "nu", "K", "kappa")}
    X, Y = to_XY(fields["K"], fields["kappa"])
    fields["X"], fields["Y"] = X, Y
    return CanonicalMoore(p, patch, ms, fields)


def _xy_rates(ms, p):
    """dX/du_bar and dY/du_bar of the canonical Moore fields, from the meridian.

    X = (1/2) ln(mu^2 + nu^2) = ln c - ln G by the conservation law, and
    Y = -2 theta with theta = atan2(mu, nu).
    """
    a2, b2, ab = p.alpha**2, p.beta**2, p.alpha * p.beta
    f, g, fp, gp, fpp, gpp = ms.f, ms.g, ms.fp, ms.gp, ms.fpp, ms.gpp
    G = a2 * f**2 + b2 * g**2
    Gu = 2.0 * (a2 * f * fp + b2 * g * gp)
    r = np.sqrt(gp**2 - fp**2)
    ru = (gp * gpp - fp * fpp) / r
    N = a2 * f * gp + b2 * g * fp
    Nu = a2 * (fp * gp + f * gpp) + b2 * (gp * fp + g * fpp)
    P = gp * f - fp * g
    Pu = gpp * f - fpp * g
    d = r * G
    du_ = ru * G + r * Gu
    nu, mu = -N / d, ab * P / d
    nu_u = -Nu / d + N * du_ / d**2
    mu_u = ab * (Pu / d - P * du_ / d**2)
    theta_u = (nu * mu_u - mu * nu_u) / (mu**2 + nu**2)
    chain = np.sqrt(G / p.c)          # du/du_bar
    return -Gu / G * chain, -2.0 * theta_u * chain


@dataclass
class MooreCauchy:
    data: CauchyData
    reference: CanonicalMoore
    steps: int
    h_u: float

    def boundary(self, u):
        """Exact (X, Y) at both v-ends; the fields do not depend on v."""
        k = int(round((u - self.data.u0) / self.h_u))
        X, Y = self.reference.fields["X"].values, self.reference.fields["Y"].values
        return (X[k, 0], Y[k, 0]), (X[k, -1], Y[k, -1])


def moore_cauchy_data(p, n_u=201, n_v=201, v_range=(0.0, 1.0)):
    """Cauchy data at u_bar = 0 for the timelike natural system, from M2."""
    cm = moore_canonical_parameters(p, n_u, n_v, v_range)
    X, Y = cm.fields["X"].values, cm.fields["Y"].values
    dX, dY = _xy_rates(cm.meridian, p)
    ones = np.ones(n_v)
    data = CauchyData(X[0].copy(), Y[0].copy(), dX[0] * ones, dY[0] * ones, cm.grid.v,
                      cm.grid.u_min)
    return MooreCauchy(data, cm, n_u - 1, cm.grid.h_u)
