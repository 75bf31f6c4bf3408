"""Fundamental forms and curvatures of a parametrized surface patch.

All quantities are computed on the whole grid at once.  Derivatives come
from the patch's analytic arrays when present, otherwise from the stencils
in :mod:`zmcsurf.grid`.  The derivative formulas follow the signed
convention

    z_uu = -G111 z_u + G211 z_v + c111 e1 + c211 e2   (likewise z_uv, z_vv)

where Gkij are the Christoffel symbols and ckij = <z_ij, e_k>.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from . import grid as fd
from .errors import DegenerateMetric, FlatPoint, FrameNotNormal, NotTimelike
from .grid import Grid
from .minkowski import inner

DERIVATIVE_KEYS = ("zu", "zv", "zuu", "zuv", "zvv")


@dataclass
class SurfacePatch:
    """Immersion sampled on a uniform grid; ``positions`` has shape (n_u, n_v, 4).

    ``derivatives`` optionally maps each of zu, zv, zuu, zuv, zvv to an array
    of the same shape holding exact partial derivatives.
    """

    positions: np.ndarray
    grid: Grid
    derivatives: dict | None = None
    label: str = ""

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.shape != (*self.grid.shape, 4):
            raise ValueError(
                f"positions shape {self.positions.shape} does not match grid {self.grid.shape}")
        if self.derivatives is not None:
            missing = [k for k in DERIVATIVE_KEYS if k not in self.derivatives]
            if missing:
                raise ValueError(f"analytic derivatives missing: {missing}")

    @classmethod
    def from_function(cls, func, grid, label=""):
        """Sample ``func(U, V) -> (..., 4)`` on ``grid`` (stencil derivatives only)."""
        U, V = grid.mesh()
        return cls(np.asarray(func(U, V), dtype=float), grid, None, label)

    def without_derivatives(self):
        return replace(self, derivatives=None)

    @property
    def has_analytic(self):
        return self.derivatives is not None


@dataclass
class FundamentalForms:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    W: np.ndarray  # sqrt(F^2 - EG) where EG - F^2 < 0, NaN elsewhere

    @property
    def det(self):
        return self.E * self.G - self.F**2


@dataclass
class GaussDecomposition:
    christoffel: dict
    c: dict  # keys "111", "211", "112", "212", "122", "222": c^k_ij as "k" + "ij"


@dataclass
class FlatPointReport:
    delta1: np.ndarray
    delta2: np.ndarray
    delta3: np.ndarray
    is_flat: np.ndarray
    tol: np.ndarray


@dataclass
class CurvatureSample:
    H: np.ndarray
    K: np.ndarray
    kappa: np.ndarray


def at(obj, node):
    """Restrict a whole-grid result (array or dataclass of arrays) to one node."""
    if node is None:
        return obj
    i, j = node
    if isinstance(obj, np.ndarray):
        return obj[i, j]
    if isinstance(obj, dict):
        return {k: at(v, node) for k, v in obj.items()}
    return type(obj)(**{f.name: at(getattr(obj, f.name), node) for f in fields(obj)})


def derivatives(patch, method="auto"):
    """Return the five partial derivative arrays of the patch.

    ``method`` is "auto" (analytic when supplied), "analytic" or "stencil".
    """
    if method not in ("auto", "analytic", "stencil"):
        raise ValueError(f"unknown derivative method {method!r}")
    if method != "stencil" and patch.derivatives is not None:
        return {k: np.asarray(patch.derivatives[k], dtype=float) for k in DERIVATIVE_KEYS}
    if method == "analytic":
        raise ValueError("patch has no analytic derivatives")
    z, g = patch.positions, patch.grid
    return {"zu": fd.d_u(z, g), "zv": fd.d_v(z, g), "zuu": fd.d_uu(z, g),
            "zuv": fd.d_uv(z, g), "zvv": fd.d_vv(z, g)}


def _forms_from(d, tol):
    E = inner(d["zu"], d["zu"])
    F = inner(d["zu"], d["zv"])
    G = inner(d["zv"], d["zv"])
    det = E * G - F**2
    scale = np.abs(E * G) + F**2
    if np.any(np.abs(det) <= tol * np.maximum(scale, np.finfo(float).tiny)):
        bad = np.argwhere(np.abs(det) <= tol * np.maximum(scale, np.finfo(float).tiny))[0]
        raise DegenerateMetric(f"EG - F^2 vanishes at node {tuple(int(i) for i in bad)}")
    with np.errstate(invalid="ignore"):
        W = np.where(det < 0, np.sqrt(np.abs(det)), np.nan)
    return FundamentalForms(E, F, G, W)


def first_fundamental(patch, node=None, method="auto", tol=1e-12):
    """E, F, G and W = sqrt(-EG + F^2); raises DegenerateMetric if EG - F^2 ~ 0."""
    return at(_forms_from(derivatives(patch, method), tol), node)


def require_timelike_gauge(forms):
    """Check the timelike gauge E < 0, G > 0 used throughout."""
    bad = ~((forms.E < 0) & (forms.G > 0))
    if np.any(bad):
        node = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NotTimelike(f"patch is not in the timelike gauge (E<0, G>0) at node {node}")


def classify_patch(patch, method="auto"):
    """'timelike', 'spacelike' or 'mixed' from the sign pattern on interior nodes."""
    forms = first_fundamental(patch, method=method)
    sl = (slice(1, -1), slice(1, -1)) if min(patch.grid.shape) > 2 else (slice(None),) * 2
    det = forms.det[sl]
    if np.all(det < 0):
        return "timelike"
    if np.all(det > 0) and np.all(forms.E[sl] > 0):
        return "spacelike"
    return "mixed"


def tangent_frame(d, forms):
    """Orthonormal tangent frame (x, y): Gram-Schmidt from the timelike z_u."""
    require_timelike_gauge(forms)
    sE = np.sqrt(-forms.E)
    x = d["zu"] / sE[..., None]
    b = forms.W / sE
    y = (d["zv"] - (forms.F / forms.E)[..., None] * d["zu"]) / b[..., None]
    return x, y


def _tangent_coords(w, d, forms):
    """Coefficients (p, q) with tangential part of w equal to p z_u + q z_v."""
    r_u = inner(w, d["zu"])
    r_v = inner(w, d["zv"])
    det = forms.det
    p = (forms.G * r_u - forms.F * r_v) / det
    q = (forms.E * r_v - forms.F * r_u) / det
    return p, q


def normal_part(w, d, forms):
    p, q = _tangent_coords(w, d, forms)
    return w - p[..., None] * d["zu"] - q[..., None] * d["zv"]


@dataclass
class SigmaField:
    """Second fundamental tensor evaluated on the orthonormal tangent frame."""

    x: np.ndarray
    y: np.ndarray
    sxx: np.ndarray
    sxy: np.ndarray
    syy: np.ndarray
    forms: FundamentalForms
    d: dict


def sigma_field(patch, method="auto"):
    d = derivatives(patch, method)
    forms = _forms_from(d, 1e-12)
    x, y = tangent_frame(d, forms)
    nuu = normal_part(d["zuu"], d, forms)
    nuv = normal_part(d["zuv"], d, forms)
    nvv = normal_part(d["zvv"], d, forms)
    E, F, W = forms.E, forms.F, forms.W
    r = (F / E)[..., None]
    sxx = nuu / (-E)[..., None]
    sxy = (nuv - r * nuu) / W[..., None]
    syy = (nvv - 2.0 * r * nuv + r**2 * nuu) * ((-E) / W**2)[..., None]
    return SigmaField(x, y, sxx, sxy, syy, forms, d)


def christoffel_symbols(patch, method="auto"):
    d = derivatives(patch, method)
    forms = _forms_from(d, 1e-12)
    out = {}
    for ij, key in (("11", "zuu"), ("12", "zuv"), ("22", "zvv")):
        p, q = _tangent_coords(d[key], d, forms)
        out["1" + ij] = -p
        out["2" + ij] = q
    return out


def _broadcast_frame(normal_frame, shape):
    e1, e2 = normal_frame
    return (np.broadcast_to(np.asarray(e1, dtype=float), (*shape, 4)),
            np.broadcast_to(np.asarray(e2, dtype=float), (*shape, 4)))


def check_normal_frame(patch, normal_frame, tol=1e-8, method="auto"):
    """Largest violation of orthonormality / normality of (e1, e2)."""
    d = derivatives(patch, method)
    e1, e2 = _broadcast_frame(normal_frame, patch.grid.shape)
    su = np.sqrt(np.abs(inner(d["zu"], d["zu"])))
    sv = np.sqrt(np.abs(inner(d["zv"], d["zv"])))
    defects = [np.abs(np.abs(inner(e1, e1)) - 1), np.abs(np.abs(inner(e2, e2)) - 1),
               np.abs(inner(e1, e2)),
               np.abs(inner(e1, d["zu"])) / su, np.abs(inner(e1, d["zv"])) / sv,
               np.abs(inner(e2, d["zu"])) / su, np.abs(inner(e2, d["zv"])) / sv]
    worst = float(max(np.max(x) for x in defects))
    if worst >= tol:
        raise FrameNotNormal(f"normal frame defect {worst:.3e} exceeds {tol:.1e}")
    return worst


def second_fundamental(patch, normal_frame, node=None, method="auto", tol=1e-8):
    """Christoffel symbols and normal coefficients c^k_ij = <z_ij, e_k>."""
    check_normal_frame(patch, normal_frame, tol, method)
    d = derivatives(patch, method)
    e1, e2 = _broadcast_frame(normal_frame, patch.grid.shape)
    c = {}
    for ij, key in (("11", "zuu"), ("12", "zuv"), ("22", "zvv")):
        c["1" + ij] = inner(d[key], e1)
        c["2" + ij] = inner(d[key], e2)
    return at(GaussDecomposition(christoffel_symbols(patch, method), c), node)


def normal_frame_from_reference(patch, reference, method="auto", orientation=None):
    """Project two reference vectors into the normal planes and orthonormalize.

    ``reference`` is a pair of vectors or vector fields.  With ``orientation``
    set to +1 or -1, e2 is flipped where needed so that
    sign det(z_u, z_v, e1, e2) equals ``orientation``.
    """
    d = derivatives(patch, method)
    forms = _forms_from(d, 1e-12)
    r1, r2 = _broadcast_frame(reference, patch.grid.shape)
    n1 = normal_part(r1, d, forms)
    n1 = n1 / np.sqrt(inner(n1, n1))[..., None]
    n2 = normal_part(r2, d, forms)
    n2 = n2 - inner(n2, n1)[..., None] * n1
    n2 = n2 / np.sqrt(inner(n2, n2))[..., None]
    if orientation is not None:
        n2 = n2 * (np.sign(frame_orientation(d["zu"], d["zv"], n1, n2)) * orientation)[..., None]
    return n1, n2


def frame_orientation(a, b, c, e):
    return np.linalg.det(np.stack([a, b, c, e], axis=-2))


def auto_normal_frame(patch, method="auto", orientation=1):
    """A smooth normal frame built from the two coordinate axes best transverse at the centre."""
    d = derivatives(patch, method)
    forms = _forms_from(d, 1e-12)
    ic, jc = patch.grid.n_u // 2, patch.grid.n_v // 2
    dn = {k: v[ic, jc] for k, v in d.items()}
    fc = FundamentalForms(*(np.asarray(getattr(forms, f.name)[ic, jc]) for f in fields(forms)))
    basis = np.eye(4)
    proj = [normal_part(basis[k], dn, fc) for k in range(4)]
    best, pair = -1.0, (0, 1)
    for a in range(4):
        for b in range(a + 1, 4):
            gab = inner(proj[a], proj[a]) * inner(proj[b], proj[b]) - inner(proj[a], proj[b])**2
            if gab > best:
                best, pair = float(gab), (a, b)
    return normal_frame_from_reference(patch, (basis[pair[0]], basis[pair[1]]), method,
                                       orientation)


def mean_curvature_vector(patch, node=None, method="auto"):
    """H = (-sigma(x,x) + sigma(y,y)) / 2 for the timelike tangent frame."""
    s = sigma_field(patch, method)
    return at(0.5 * (s.syy - s.sxx), node)


def gauss_curvature(patch, method="auto"):
    s = sigma_field(patch, method)
    return inner(s.sxx, s.syy) - inner(s.sxy, s.sxy)


def normal_curvature(patch, normal_frame, method="auto", route="ricci"):
    """kappa = <R_perp(x, y) e2, e1> relative to the given normal frame.

    route="ricci" evaluates the Ricci equation algebraically from sigma;
    route="connection" differences the normal connection form on the grid.
    """
    e1, e2 = _broadcast_frame(normal_frame, patch.grid.shape)
    if route == "ricci":
        s = sigma_field(patch, method)
        X1, X2 = inner(s.sxx, e1), inner(s.sxx, e2)
        Y1, Y2 = inner(s.syy, e1), inner(s.syy, e2)
        C1, C2 = inner(s.sxy, e1), inner(s.sxy, e2)
        return C1 * (X2 + Y2) - C2 * (X1 + Y1)
    if route == "connection":
        g = patch.grid
        forms = first_fundamental(patch, method=method)
        w_u = inner(fd.d_u(e1, g), e2)
        w_v = inner(fd.d_v(e1, g), e2)
        return (fd.d_v(w_u, g) - fd.d_u(w_v, g)) / forms.W
    raise ValueError(f"unknown route {route!r}")


def gauss_and_normal_curvature(patch, normal_frame=None, nu_mu=None, node=None,
                               method="auto", route="connection"):
    """H, K and kappa.

    When ``nu_mu`` is given the geometric-frame identities K = nu^2 - mu^2
    and kappa = -2 nu mu are used (FlatPoint if nu*mu vanishes somewhere);
    otherwise K comes from sigma and kappa from ``normal_curvature``.
    """
    s = sigma_field(patch, method)
    H = 0.5 * (s.syy - s.sxx)
    if nu_mu is not None:
        nu, mu = (np.asarray(a, dtype=float) for a in nu_mu)
        if np.any(np.abs(nu * mu) == 0):
            raise FlatPoint("nu * mu vanishes: geometric frame undefined")
        return at(CurvatureSample(H, nu**2 - mu**2, -2.0 * nu * mu), node)
    K = inner(s.sxx, s.syy) - inner(s.sxy, s.sxy)
    if normal_frame is None:
        normal_frame = auto_normal_frame(patch, method)
    kappa = normal_curvature(patch, normal_frame, method, route)
    return at(CurvatureSample(H, K, kappa), node)


def flat_point_scan(patch, normal_frame, tol=None, method="auto", frame_tol=1e-8):
    """Determinants of the normal coefficients and the per-node flatness flag.

    Default tolerance is relative: max|Delta_i| <= 1e-9 * (max_ij,k |c^k_ij|)^2.
    """
    c = second_fundamental(patch, normal_frame, method=method, tol=frame_tol).c
    d1 = c["111"] * c["212"] - c["112"] * c["211"]
    d2 = c["111"] * c["222"] - c["122"] * c["211"]
    d3 = c["112"] * c["222"] - c["122"] * c["212"]
    if tol is None:
        scale = np.max(np.abs(np.stack(list(c.values()))), axis=0)
        tol_arr = 1e-9 * scale**2
    else:
        tol_arr = np.full(patch.grid.shape, float(tol))
    worst = np.maximum(np.maximum(np.abs(d1), np.abs(d2)), np.abs(d3))
    return FlatPointReport(d1, d2, d3, worst <= tol_arr, tol_arr)
