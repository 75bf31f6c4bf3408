"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) before
asserting, so the full table is printed even when a criterion fails.
"""

import time
from dataclasses import replace

import numpy as np

from zmcsurf.bonnet import reconstruct
from zmcsurf.canonical import SigmaComponents, diagonalizing_angle, rotate_sigma
from zmcsurf.canonical import frame_invariants, geometric_frame, structure_equation_residuals
from zmcsurf.geometry import (auto_normal_frame, first_fundamental, flat_point_scan,
                              gauss_and_normal_curvature, gauss_curvature, mean_curvature_vector,
                              normal_curvature, normal_frame_from_reference)
from zmcsurf.grid import interior_max
from zmcsurf.moore import (MooreParams, invariants_from_meridian, moore_canonical_parameters,
                           moore_cauchy_data, moore_invariants, moore_normal_frame, moore_surface)
from zmcsurf.natural_pde import (SystemKind, residual_Kkappa, residual_munu, residual_XY,
                                 solve_hyperbolic)

from conftest import lorentz_plane, record
from test_canonical import scan_angle
from test_natural_pde import _manufactured

P = MooreParams()
WIDE = replace(P, g_range=(0.05, 1.0))


def _order_ok(errs):
    return all(3.4 <= a / b <= 4.6 for a, b in zip(errs, errs[1:]))


def _interior_min_abs(a):
    return float(np.min(np.abs(a[1:-1, 1:-1])))


def _fmt(xs):
    return "[" + ", ".join(f"{x:.3g}" for x in xs) + "]"


def _frame_and_inv(cm):
    ref = moore_normal_frame(P, cm.meridian, cm.grid.v / np.sqrt(P.c))
    gf = geometric_frame(cm.patch, ref)
    return frame_invariants(cm.patch, gf)


def test_criterion_01_curvature_identities():
    ms = moore_surface(WIDE, 101, 101)
    patch = ms.patch
    ex = invariants_from_meridian(ms.meridian, WIDE)
    K_ex, k_ex = ex["K"][:, None], ex["kappa"][:, None]
    ref = moore_normal_frame(WIDE, ms.meridian, patch.grid.v)
    eK = np.max(np.abs(gauss_curvature(patch) - K_ex))
    ek = np.max(np.abs(normal_curvature(patch, ref) - k_ex))
    sp = patch.without_derivatives()
    frame = normal_frame_from_reference(sp, ref, method="stencil")
    sK = interior_max(gauss_curvature(sp, "stencil") - K_ex)
    sk = interior_max(normal_curvature(sp, frame, "stencil") - k_ex)
    analytic, stencil = max(eK, ek) < 1e-8, max(sK, sk) < 1e-5
    record(1, analytic and stencil,
           f"analytic K {eK:.2e} kappa {ek:.2e} (tol 1e-8); "
           f"stencil K {sK:.2e} kappa {sk:.2e} (tol 1e-5); g in [0.05, 1], 101x101")
    assert analytic and stencil


def test_criterion_02_zmc_verification():
    errs = []
    for n in (101, 201):
        patch = moore_surface(WIDE, n, n).patch.without_derivatives()
        errs.append(interior_max(np.linalg.norm(mean_curvature_vector(patch, method="stencil"),
                                                axis=-1)))
    ratio = errs[0] / errs[1]
    ok = errs[0] < 1e-5 and 3.4 <= ratio <= 4.6
    record(2, ok, f"max |H| {errs[0]:.3g} at h=1/100 (tol 1e-5), ratio h/(h/2) {ratio:.3g} "
                  "(want [3.4, 4.6]); g in [0.05, 1]")
    assert ok


def test_criterion_03_conservation():
    ms = moore_surface(WIDE, 101, 101)
    worst = np.max(np.abs(invariants_from_meridian(ms.meridian, WIDE)["conservation"]))
    dense = moore_invariants(WIDE, g=np.linspace(0.05, 1.0, 10001))
    worst = max(worst, np.max(np.abs(dense["conservation"])))
    record(3, worst < 1e-10, f"max |(mu^2+nu^2)G^2 - A(alpha^2+beta^2)| {worst:.2e} (tol 1e-10)")
    assert worst < 1e-10


def test_criterion_04_canonical_gauge(canonical101):
    cm = canonical101
    rho = np.hypot(cm.fields["mu"].values, cm.fields["nu"].values)
    out = {}
    for method in ("analytic", "stencil"):
        f = first_fundamental(cm.patch, method=method)
        out[method] = max(np.max(np.abs(f.E * rho + 1)), np.max(np.abs(f.G * rho - 1)))
    ok = max(out.values()) < 5e-4
    record(4, ok, f"gauge defect analytic {out['analytic']:.2e}, stencil {out['stencil']:.2e} "
                  "(tol 5e-4), 101x101")
    assert ok


def test_criterion_05_natural_pde_residuals(canonical101, canonical201):
    cms = (moore_canonical_parameters(P, 51, 51), canonical101, canonical201)
    errs = {"munu": [], "Kkappa": [], "XY": []}
    for cm in cms:
        f = cm.fields
        errs["munu"].append(max(interior_max(r.values) for r in residual_munu(f["mu"], f["nu"])))
        errs["Kkappa"].append(max(interior_max(r.values) for r in
                                  residual_Kkappa(f["K"], f["kappa"], SystemKind.TIMELIKE)))
        errs["XY"].append(max(interior_max(r.values) for r in
                              residual_XY(f["X"], f["Y"], SystemKind.TIMELIKE)))
    ok = all(e[1] < 1e-3 and _order_ok(e) for e in errs.values())
    record(5, ok, "; ".join(f"{k} {_fmt(v)}" for k, v in errs.items())
           + " at 51/101/201 (tol 1e-3 at 101, order 2)")
    assert ok


def test_criterion_06_bonnet_roundtrip(canonical101):
    f = canonical101.fields
    t0 = time.perf_counter()
    R = reconstruct(f["mu"], f["nu"])
    elapsed = time.perf_counter() - t0
    frame = auto_normal_frame(R.patch, "stencil", orientation=R.frame.orientation)
    cs = gauss_and_normal_curvature(R.patch, frame, method="stencil", route="ricci")
    eK = interior_max(cs.K - f["K"].values)
    ek = interior_max(cs.kappa - f["kappa"].values)
    gram = R.frame.max_gram_defect
    path = max(R.frame.path_discrepancy, R.path_discrepancy)
    ok = (gram < 1e-6 and not R.frame.renormalized and path < 1e-4 and max(eK, ek) < 1e-4
          and elapsed <= 120)
    record(6, ok, f"gram {gram:.2e} (tol 1e-6), dual path {path:.2e} (tol 1e-4), "
                  f"K {eK:.2e} kappa {ek:.2e} (tol 1e-4), {elapsed:.2f} s (limit 120 s)")
    assert ok


def test_criterion_07_structure_equations(canonical101, canonical201):
    cms = (moore_canonical_parameters(P, 51, 51), canonical101, canonical201)
    errs = np.array([[interior_max(r.values) for r in structure_equation_residuals(_frame_and_inv(cm))]
                     for cm in cms])
    below = bool(np.all(errs[1] < 1e-3))
    # a residual already at roundoff level has no truncation error left to decay
    decaying = [k for k in range(6) if errs[0, k] > 1e-10]
    order = all(_order_ok(errs[:, k]) for k in decaying)
    ok = below and order
    record(7, ok, f"max residuals at 101 {_fmt(errs[1])} (tol 1e-3); order 2 on "
                  f"S{', S'.join(str(k + 1) for k in decaying)}, others at roundoff "
                  f"{_fmt([errs[1, k] for k in range(6) if k not in decaying])}")
    assert ok


def test_criterion_08_flat_points(moore101, canonical101):
    mins = {}
    for name, patch in (("moore", moore101.patch), ("moore-wide", moore_surface(WIDE, 101, 101).patch),
                        ("canonical", canonical101.patch)):
        cs = gauss_and_normal_curvature(patch, auto_normal_frame(patch), route="ricci")
        mins[name] = (_interior_min_abs(cs.K), _interior_min_abs(cs.kappa))
    f = canonical101.fields
    R = reconstruct(f["mu"], f["nu"])
    cs = gauss_and_normal_curvature(R.patch, auto_normal_frame(R.patch, "stencil"),
                                    method="stencil", route="ricci")
    mins["reconstructed"] = (_interior_min_abs(cs.K), _interior_min_abs(cs.kappa))
    plane = lorentz_plane(21)
    fp = flat_point_scan(plane, (np.array([0, 1.0, 0, 0]), np.array([0, 0, 1.0, 0])))
    deltas = max(np.max(np.abs(d)) for d in (fp.delta1, fp.delta2, fp.delta3))
    ok = all(min(v) > 0 for v in mins.values()) and deltas == 0 and bool(np.all(fp.is_flat))
    record(8, ok, "; ".join(f"{k} min|K| {a:.3g} min|kappa| {b:.3g}" for k, (a, b) in mins.items())
           + f"; Lorentz plane max|Delta| {deltas:g}")
    assert ok


def test_criterion_09_hyperbolic_solver():
    errs = [_manufactured(n) for n in (21, 41, 81, 161)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    mc = moore_cauchy_data(P, 201, 201)
    X, Y = solve_hyperbolic(mc.data, mc.steps, mc.h_u, SystemKind.TIMELIKE, boundary=mc.boundary)
    ref = mc.reference.fields
    rec = max(np.max(np.abs(X.values - ref["X"].values)), np.max(np.abs(Y.values - ref["Y"].values)))
    ok = all(3.4 <= r <= 4.6 for r in ratios) and rec < 1e-3
    record(9, ok, f"manufactured ratios {_fmt(ratios)} (want [3.4, 4.6]); Moore-Cauchy error "
                  f"{rec:.2e} at 201x201 (tol 1e-3), h_u/h_v {mc.h_u / mc.data.h_v:.3g}")
    assert ok


def test_criterion_10_diagonalization():
    rng = np.random.default_rng(2024)
    worst_cross, worst_phi, n = 0.0, 0.0, 10_000
    for a, b, c, d in rng.normal(size=(n, 4)):
        s = SigmaComponents(a, b, c, d)
        phi = diagonalizing_angle(s)
        r = rotate_sigma(s, phi)
        worst_cross = max(worst_cross, abs(r.cross) / s.scale)
        worst_phi = max(worst_phi, abs(phi - scan_angle(s)))
    ok = worst_cross < 1e-10 and worst_phi < 1e-6
    record(10, ok, f"{n} samples: max |a'c'+b'd'|/S {worst_cross:.2e} (tol 1e-10), "
                   f"max |phi - scan| {worst_phi:.2e} (tol 1e-6)")
    assert ok
