"""Discrete operators, residuals and solvers for the natural PDE systems.

Three background systems are handled, all written for (X, Y) with
K = e^{2X} cos Y, kappa = e^{2X} sin Y (cosh/sinh in the Euclidean case):

    timelike_hyperbolic   D^h X = 2 e^X cos Y,   D^h Y = 2 e^X sin Y
    spacelike_elliptic    D   X = 2 e^X cos Y,   D   Y = 2 e^X sin Y
    euclidean_elliptic    D   X = 2 e^X cosh Y,  D   Y = 2 e^X sinh Y

with D^h = d_uu - d_vv and D = d_uu + d_vv.  Operators return NaN on the
boundary ring; residual statistics always exclude it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import Blowup, CFLViolation, GridTooSmall, NoConvergence, ValidationError, ZeroModulus
from .grid import Grid, GridField, residual_stats, unwrap_phase


class SystemKind(str, Enum):
    TIMELIKE = "timelike_hyperbolic"
    SPACELIKE = "spacelike_elliptic"
    EUCLIDEAN = "euclidean_elliptic"


def _kind(kind):
    return SystemKind(kind)


def _values(F):
    return F.values if isinstance(F, GridField) else np.asarray(F, dtype=float)


def _second_differences(F):
    a = F.values
    if min(a.shape[:2]) < 3:
        raise GridTooSmall("Laplace stencils need at least 3x3 nodes")
    Fuu = np.full(a.shape, np.nan)
    Fvv = np.full(a.shape, np.nan)
    Fuu[1:-1, 1:-1] = (a[2:, 1:-1] - 2 * a[1:-1, 1:-1] + a[:-2, 1:-1]) / F.h_u**2
    Fvv[1:-1, 1:-1] = (a[1:-1, 2:] - 2 * a[1:-1, 1:-1] + a[1:-1, :-2]) / F.h_v**2
    return Fuu, Fvv


def hyperbolic_laplacian(F):
    Fuu, Fvv = _second_differences(F)
    return GridField(Fuu - Fvv, F.grid, "hyperbolic_laplacian")


def laplacian(F):
    Fuu, Fvv = _second_differences(F)
    return GridField(Fuu + Fvv, F.grid, "laplacian")


def _operator(kind):
    return hyperbolic_laplacian if _kind(kind) is SystemKind.TIMELIKE else laplacian


def _modulus_check(r, what, tol):
    if np.any(r < tol):
        node = tuple(int(i) for i in np.argwhere(r < tol)[0])
        raise ZeroModulus(f"{what} vanishes at node {node}")


def residual_munu(mu, nu, tol=1e-300):
    """Residuals of the (mu, nu) system in canonical parameters.

    R1 = rho^(1/2) D^h ln rho^(1/4) - (nu^2 - mu^2)
    R2 = rho^(1/2) D^h arctan(mu/nu) - 2 nu mu,      rho = mu^2 + nu^2
    """
    m, n = mu.values, nu.values
    rho = m**2 + n**2
    _modulus_check(rho, "mu^2 + nu^2", tol)
    grid = mu.grid
    L = GridField(0.25 * np.log(rho), grid)
    T = GridField(unwrap_phase(np.arctan2(m, n)), grid)
    s = np.sqrt(rho)
    R1 = s * hyperbolic_laplacian(L).values - (n**2 - m**2)
    R2 = s * hyperbolic_laplacian(T).values - 2.0 * n * m
    return GridField(R1, grid, "R1"), GridField(R2, grid, "R2")


def residual_Kkappa(K, kappa, kind=SystemKind.TIMELIKE, tol=1e-300):
    """Residuals of the (K, kappa) system with D^h (timelike) or D (spacelike).

    R1 = r^(1/4) Op ln r^(1/8) - K,  R2 = r^(1/4) Op arctan(kappa/K) - 2 kappa,
    r = K^2 + kappa^2.  The Euclidean case is supported only in (X, Y) form.
    """
    kind = _kind(kind)
    if kind is SystemKind.EUCLIDEAN:
        raise ValidationError("Euclidean system is supported in (X, Y) form only; use residual_XY")
    k, q = K.values, kappa.values
    r = k**2 + q**2
    _modulus_check(r, "K^2 + kappa^2", tol)
    op = _operator(kind)
    grid = K.grid
    L = GridField(0.125 * np.log(r), grid)
    T = GridField(unwrap_phase(np.arctan2(q, k)), grid)
    s = r**0.25
    return (GridField(s * op(L).values - k, grid, "R1"),
            GridField(s * op(T).values - 2.0 * q, grid, "R2"))


def to_XY(K, kappa, tol=1e-300):
    """X = ln(K^2 + kappa^2)/4, Y = atan2(kappa, K) unwrapped along rows then columns."""
    k, q = _values(K), _values(kappa)
    r = k**2 + q**2
    _modulus_check(r, "K^2 + kappa^2", tol)
    X = 0.25 * np.log(r)
    Y = np.arctan2(q, k)
    if Y.ndim == 2:
        Y = unwrap_phase(Y)
    elif Y.ndim == 1:
        Y = np.unwrap(Y)
    if isinstance(K, GridField):
        return GridField(X, K.grid, "X"), GridField(Y, K.grid, "Y")
    return X, Y


def from_XY(X, Y):
    x, y = _values(X), _values(Y)
    e = np.exp(2.0 * x)
    K, kappa = e * np.cos(y), e * np.sin(y)
    if isinstance(X, GridField):
        return GridField(K, X.grid, "K"), GridField(kappa, X.grid, "kappa")
    return K, kappa


def source_terms(X, Y, kind):
    ex = np.exp(X)
    if _kind(kind) is SystemKind.EUCLIDEAN:
        return 2.0 * ex * np.cosh(Y), 2.0 * ex * np.sinh(Y)
    return 2.0 * ex * np.cos(Y), 2.0 * ex * np.sin(Y)


def residual_XY(X, Y, kind=SystemKind.TIMELIKE):
    """R1 = Op X - source_X, R2 = Op Y - source_Y for the selected system."""
    op = _operator(kind)
    sX, sY = source_terms(X.values, Y.values, kind)
    return (GridField(op(X).values - sX, X.grid, "R1"),
            GridField(op(Y).values - sY, X.grid, "R2"))


# -- hyperbolic marching ----------------------------------------------------

@dataclass
class CauchyData:
    """Values and u-derivatives of (X, Y) on the initial line u = u0."""

    X0: np.ndarray
    Y0: np.ndarray
    dX0: np.ndarray
    dY0: np.ndarray
    v: np.ndarray
    u0: float = 0.0

    def __post_init__(self):
        for name in ("X0", "Y0", "dX0", "dY0"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != np.shape(self.v):
                raise ValidationError(f"{name} is not sampled on the v-grid")
            setattr(self, name, a)

    @property
    def h_v(self):
        return float(self.v[1] - self.v[0])


def solve_hyperbolic(data, steps, h_u, kind=SystemKind.TIMELIKE, forcing=None,
                     boundary=None, blowup=50.0):
    """March D^h X = 2 e^X cos Y + F_X, D^h Y = 2 e^X sin Y + F_Y in u with leapfrog.

    X^{k+1} = 2X^k - X^{k-1} + h_u^2 (X^k_vv + source + forcing); the first
    level comes from a second-order Taylor start using the Cauchy data.

    ``forcing`` is None or a callable (u, v) -> (F_X, F_Y) on a level.
    ``boundary`` is None or a callable u -> ((X_left, Y_left), (X_right, Y_right))
    giving Dirichlet values at the two v-ends; without it the computed region
    shrinks by one node per level on each side (domain of dependence) and
    nodes outside it are NaN.
    """
    if _kind(kind) is not SystemKind.TIMELIKE:
        raise ValidationError("solve_hyperbolic handles the timelike system only")
    v = np.asarray(data.v, dtype=float)
    if v.size < 3:
        raise GridTooSmall("need at least 3 v-nodes")
    h_v = data.h_v
    if abs(h_u / h_v) > 1.0 + 1e-12:
        raise CFLViolation(f"h_u = {h_u:.4g} exceeds h_v = {h_v:.4g}")
    n = v.size
    u = data.u0 + h_u * np.arange(steps + 1)
    X = np.full((steps + 1, n), np.nan)
    Y = np.full((steps + 1, n), np.nan)
    X[0], Y[0] = data.X0, data.Y0
    grid = Grid(u[0], u[-1], v[0], v[-1], steps + 1, n)
    if steps == 0:
        return GridField(X, grid, "X"), GridField(Y, grid, "Y")

    def accel(k, Xk, Yk):
        a = np.full((2, n), np.nan)
        Xvv = (Xk[2:] - 2 * Xk[1:-1] + Xk[:-2]) / h_v**2
        Yvv = (Yk[2:] - 2 * Yk[1:-1] + Yk[:-2]) / h_v**2
        sX, sY = source_terms(Xk[1:-1], Yk[1:-1], kind)
        a[0, 1:-1] = Xvv + sX
        a[1, 1:-1] = Yvv + sY
        if forcing is not None:
            fX, fY = forcing(u[k], v)
            a[0, 1:-1] += np.broadcast_to(fX, v.shape)[1:-1]
            a[1, 1:-1] += np.broadcast_to(fY, v.shape)[1:-1]
        return a

    def close(k):
        if boundary is not None:
            (xl, yl), (xr, yr) = boundary(u[k])
            X[k, 0], Y[k, 0], X[k, -1], Y[k, -1] = xl, yl, xr, yr
        if not np.all(np.abs(X[k][np.isfinite(X[k])]) <= blowup):
            raise Blowup(f"|X| exceeded {blowup} at u = {u[k]:.6g}")

    a0 = accel(0, X[0], Y[0])
    X[1] = X[0] + h_u * data.dX0 + 0.5 * h_u**2 * a0[0]
    Y[1] = Y[0] + h_u * data.dY0 + 0.5 * h_u**2 * a0[1]
    close(1)
    for k in range(1, steps):
        a = accel(k, X[k], Y[k])
        X[k + 1] = 2 * X[k] - X[k - 1] + h_u**2 * a[0]
        Y[k + 1] = 2 * Y[k] - Y[k - 1] + h_u**2 * a[1]
        close(k + 1)
    return GridField(X, grid, "X"), GridField(Y, grid, "Y")


# -- elliptic relaxation ----------------------------------------------------

@dataclass
class ConvergenceReport:
    converged: bool
    iterations: int
    max_residual: float
    history: list

    def as_dict(self):
        return {"converged": self.converged, "iterations": self.iterations,
                "max_residual": self.max_residual}


def _local_jacobian(X, Y, kind, diag):
    ex = np.exp(X)
    if _kind(kind) is SystemKind.EUCLIDEAN:
        ch, sh = np.cosh(Y), np.sinh(Y)
        return (-diag - 2 * ex * ch, -2 * ex * sh, -2 * ex * sh, -diag - 2 * ex * ch)
    c, s = np.cos(Y), np.sin(Y)
    return (-diag - 2 * ex * c, 2 * ex * s, -2 * ex * s, -diag - 2 * ex * c)


def solve_elliptic(X_init, Y_init, kind=SystemKind.SPACELIKE, damping=0.8, tol=1e-10,
                   max_iter=100_000, check_every=10):
    """Damped red-black Newton-Gauss-Seidel relaxation with Dirichlet boundary ring.

    The boundary ring of ``X_init``/``Y_init`` is the Dirichlet data and the
    interior is the starting guess.  Returns (X, Y, report); raises
    NoConvergence carrying the partial fields when ``max_iter`` is reached.
    """
    kind = _kind(kind)
    if kind is SystemKind.TIMELIKE:
        raise ValidationError("solve_elliptic handles the elliptic systems only")
    grid = X_init.grid
    if min(grid.shape) < 3:
        raise GridTooSmall("need at least 3x3 nodes")
    X = X_init.values.copy()
    Y = Y_init.values.copy()
    hu2, hv2 = grid.h_u**2, grid.h_v**2
    diag = 2.0 / hu2 + 2.0 / hv2
    I, J = np.meshgrid(np.arange(grid.n_u), np.arange(grid.n_v), indexing="ij")
    interior = np.zeros(grid.shape, bool)
    interior[1:-1, 1:-1] = True
    colors = [interior & ((I + J) % 2 == c) for c in (0, 1)]
    history = []

    def lap(a):
        out = np.zeros_like(a)
        out[1:-1, 1:-1] = ((a[2:, 1:-1] - 2 * a[1:-1, 1:-1] + a[:-2, 1:-1]) / hu2
                           + (a[1:-1, 2:] - 2 * a[1:-1, 1:-1] + a[1:-1, :-2]) / hv2)
        return out

    def max_res():
        sX, sY = source_terms(X, Y, kind)
        r1 = (lap(X) - sX)[1:-1, 1:-1]
        r2 = (lap(Y) - sY)[1:-1, 1:-1]
        return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))

    res = max_res()
    it = 0
    while res >= tol and it < max_iter:
        for mask in colors:
            sX, sY = source_terms(X, Y, kind)
            r1 = (lap(X) - sX)[mask]
            r2 = (lap(Y) - sY)[mask]
            a, b, c, d = _local_jacobian(X[mask], Y[mask], kind, diag)
            det = a * d - b * c
            X[mask] -= damping * (d * r1 - b * r2) / det
            Y[mask] -= damping * (a * r2 - c * r1) / det
        it += 1
        if it % check_every == 0 or it == max_iter:
            res = max_res()
            history.append(res)
            if not np.isfinite(res):
                break
    report = ConvergenceReport(bool(res < tol), it, res, history)
    Xf, Yf = GridField(X, grid, "X"), GridField(Y, grid, "Y")
    if not report.converged:
        raise NoConvergence(f"residual {res:.3e} after {it} sweeps", Xf, Yf, report)
    return Xf, Yf, report


def residual_report(pairs):
    """Stats dict for named residual fields."""
    return {name: residual_stats(f.values) for name, f in pairs.items()}
