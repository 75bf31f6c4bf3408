"""Command line: moore, verify, reconstruct, pde and export.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure
(the report is still written when the command got far enough to have one).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import io as zio
from .bonnet import build_AB, integrability_report, integrate_frame, integrate_position
from .bonnet import centre_node, verify_reconstruction
from .canonical import frame_invariants, geometric_frame, structure_equation_residuals
from .errors import DriftExceeded, NoConvergence, NumericalError, ValidationError, ZMCError
from .geometry import (auto_normal_frame, classify_patch, first_fundamental, flat_point_scan,
                       mean_curvature_vector)
from .grid import Grid, GridField, residual_stats
from .minkowski import inner
from .moore import MooreParams, moore_canonical_parameters, moore_cauchy_data
from .natural_pde import (SystemKind, residual_munu, residual_XY, solve_elliptic,
                          solve_hyperbolic)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

DEFAULT_TOLS = {"zmc": 1e-3, "gauge": 5e-4, "structure": 1e-3, "pde": 1e-3,
                "conservation": 1e-10, "reconstruction": 1e-4, "integrability": 1e-3,
                "drift": 1e-6, "recovery": 1e-3}


def _float(x):
    if isinstance(x, bool):
        raise ValueError("expected a number")
    return float(x)


def _int(x):
    if isinstance(x, bool) or int(x) != x:
        raise ValueError("expected an integer")
    return int(x)


def _pair(x):
    if not (isinstance(x, (list, tuple)) and len(x) == 2):
        raise ValueError("expected a two-element list")
    return (_float(x[0]), _float(x[1]))


def _tols(x):
    if not isinstance(x, dict):
        raise ValueError("expected an object of tolerances")
    unknown = sorted(set(x) - set(DEFAULT_TOLS))
    if unknown:
        raise ValueError(f"unknown tolerance(s) {', '.join(unknown)}")
    return {k: _float(v) for k, v in x.items()}


def _kind(x):
    return SystemKind(x)


MOORE_SCHEMA = {"alpha": _float, "beta": _float, "A": _float, "C": _float, "eps": _int,
                "g_range": _pair, "v_range": _pair}
COMMON_SCHEMA = {"grid": zio.parse_grid, "tol": _tols}
SCHEMAS = {
    "moore": {**COMMON_SCHEMA, "moore": MOORE_SCHEMA, "project": str},
    "verify": {**COMMON_SCHEMA, "mesh": str},
    "reconstruct": {**COMMON_SCHEMA, "mu": str, "nu": str, "anchor": _pair,
                    "renorm": bool, "path_check": bool, "project": str},
    "pde": {**COMMON_SCHEMA, "kind": _kind, "source": str, "moore": MOORE_SCHEMA,
            "X": str, "Y": str, "boundary": _pair, "damping": _float,
            "max_iter": _int, "extent": _pair},
    "export": {"mesh": str, "project": str},
}


class Run:
    """Collects the report of one command and writes it on exit."""

    def __init__(self, command, out, params):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.t0 = time.perf_counter()
        self.report = {"command": command, "params": params, "grid": None, "residuals": {},
                       "drift": {}, "checks": {}, "timing": {}, "version": __version__}

    def check(self, name, value, tol, passed=None, **extra):
        value = float(value)
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.report["checks"][name] = {"value": value, "tol": float(tol), "pass": ok, **extra}
        return ok

    def fail(self, name, exc):
        self.report["checks"][name] = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}

    def residual(self, name, values, ring=1):
        self.report["residuals"][name] = {**residual_stats(values, ring), "ring": ring}
        return self.report["residuals"][name]

    def write(self):
        self.report["timing"]["total_s"] = time.perf_counter() - self.t0
        zio.write_report(self.out / "report.json", self.report)


def _moore_params(cfg):
    m = dict(cfg.get("moore", {}))
    v_range = m.pop("v_range", (0.0, 1.0))
    return MooreParams(**m).validate(), v_range


def _grid_size(args, cfg, default=(101, 101)):
    if args.grid is not None:
        try:
            return zio.parse_grid(args.grid)
        except ValueError as exc:
            raise ValidationError(f"--grid: {exc}") from exc
    return cfg.get("grid", default)


def _tolerances(args, cfg):
    tols = {**DEFAULT_TOLS, **cfg.get("tol", {})}
    if args.tol is not None:
        tols = {k: args.tol for k in tols}
    return tols


def _project(args, cfg):
    drop = args.project or cfg.get("project", "x2")
    zio.projection_axes(drop)
    return drop


# -- commands -------------------------------------------------------------------

def cmd_moore(args, cfg):
    p, v_range = _moore_params(cfg)
    n_u, n_v = _grid_size(args, cfg)
    tols = _tolerances(args, cfg)
    drop = _project(args, cfg)
    run = Run("moore", args.out, {"moore": {**p.as_dict(), "v_range": list(v_range)},
                                  "tol": tols, "project": drop})
    try:
        cm = moore_canonical_parameters(p, n_u, n_v, v_range)
        run.report["grid"] = cm.grid.as_dict()
        zio.write_mesh(run.out / "mesh.csv", cm.patch)
        zio.write_obj(run.out / "mesh.obj", cm.patch, drop)
        for name in ("mu", "nu", "K", "kappa", "X", "Y"):
            f = cm.fields[name]
            zio.write_field(run.out / f"{name}.csv", GridField(f.values, f.grid, name))
        H = mean_curvature_vector(cm.patch)
        run.check("zmc_residual", np.max(np.abs(H)), tols["zmc"])
        mod = np.hypot(cm.fields["mu"].values, cm.fields["nu"].values)
        G_arc = p.alpha**2 * cm.meridian.f**2 + p.beta**2 * cm.meridian.g**2
        run.check("conservation", np.max(np.abs(mod[:, 0]**2 * G_arc**2 - p.c**2)),
                  tols["conservation"])
        forms = first_fundamental(cm.patch)
        run.check("canonical_gauge", max(np.max(np.abs(forms.E * mod + 1)),
                                         np.max(np.abs(forms.G * mod - 1))), tols["gauge"])
        for name, r in zip(("munu_1", "munu_2"), residual_munu(cm.fields["mu"], cm.fields["nu"])):
            run.residual(name, r.values)
    finally:
        run.write()
    return EXIT_OK


# Invariants recomputed from positions already carry second differences; the
# structure and natural-system residuals difference them again, so nodes next
# to the boundary see the one-sided stencils twice.  Those two rings are left
# out of the derived-field statistics.
DERIVED_RING = 2


def _verify_patch(run, patch, tols):
    grid = patch.grid
    run.report["grid"] = grid.as_dict()
    classify_patch(patch, "stencil")
    H = mean_curvature_vector(patch, method="stencil")
    run.residual("H", np.sqrt(np.abs(inner(H, H))))
    run.check("zmc_residual", run.report["residuals"]["H"]["max"], tols["zmc"])
    frame = auto_normal_frame(patch, "stencil")
    scan = flat_point_scan(patch, frame, method="stencil")
    n_flat = int(np.count_nonzero(scan.is_flat[1:-1, 1:-1]))
    run.check("flat_free", n_flat, 0, flat_nodes=n_flat)
    if n_flat:
        run.report["checks"]["canonical_frame"] = {
            "pass": False, "error": f"FlatPoint: {n_flat} flat interior node(s)"}
        return
    try:
        gf = geometric_frame(patch, frame, method="stencil")
        inv = frame_invariants(patch, gf, method="stencil")
    except NumericalError as exc:
        run.fail("canonical_frame", exc)
        return
    run.report["checks"]["canonical_frame"] = {"pass": True, "orientation": gf.orientation}
    worst = max(run.residual(r.name, r.values, DERIVED_RING)["max"]
                for r in structure_equation_residuals(inv))
    run.check("structure_equations", worst, tols["structure"])
    mod = np.hypot(inv.mu, inv.nu)
    gauge = max(residual_stats(inv.E * mod + 1)["max"], residual_stats(inv.G * mod - 1)["max"])
    run.report["derived_ring"] = DERIVED_RING
    run.check("canonical_gauge", gauge, tols["gauge"])
    if gauge <= tols["gauge"]:
        r1, r2 = residual_munu(GridField(inv.mu, grid), GridField(inv.nu, grid))
        worst = max(run.residual("munu_1", r1.values, DERIVED_RING)["max"],
                    run.residual("munu_2", r2.values, DERIVED_RING)["max"])
        run.check("pde_residual", worst, tols["pde"])


def cmd_verify(args, cfg):
    mesh = args.mesh or cfg.get("mesh")
    if not mesh:
        raise ValidationError("verify needs a mesh CSV (argument or config key 'mesh')")
    tols = _tolerances(args, cfg)
    patch = zio.read_mesh(mesh)
    run = Run("verify", args.out, {"mesh": str(mesh), "tol": tols})
    try:
        _verify_patch(run, patch, tols)
    finally:
        run.write()
    return EXIT_OK


def cmd_reconstruct(args, cfg):
    mu_path = args.mu or cfg.get("mu")
    nu_path = args.nu or cfg.get("nu")
    if not (mu_path and nu_path):
        raise ValidationError("reconstruct needs mu and nu field files")
    mu, nu = zio.read_field(mu_path), zio.read_field(nu_path)
    if mu.grid != nu.grid:
        raise ValidationError(f"mu grid {mu.grid.shape} does not match nu grid {nu.grid.shape}")
    tols = _tolerances(args, cfg)
    drop = _project(args, cfg)
    renorm = bool(args.renorm or cfg.get("renorm", False))
    path_check = bool(args.path_check or cfg.get("path_check", True))
    anchor = tuple(int(a) for a in cfg.get("anchor", centre_node(mu.grid)))
    run = Run("reconstruct", args.out, {"mu": str(mu_path), "nu": str(nu_path), "tol": tols,
                                        "anchor": list(anchor), "renorm": renorm,
                                        "path_check": path_check, "project": drop})
    run.report["grid"] = mu.grid.as_dict()
    try:
        M = build_AB(mu, nu)
        integ = integrability_report(M, tols["integrability"])
        run.report["residuals"]["integrability"] = integ
        if integ["status"] != "ok":
            run.report["warnings"] = [f"NotIntegrable: integrability residual "
                                      f"{integ['max']:.3e} > {integ['threshold']:.1e}"]
        F = integrate_frame(M, anchor=anchor, renorm=renorm, path_check=path_check,
                            drift_budget=np.inf)
        R = integrate_position(F, M)
        run.report["drift"] = {"max_gram_defect": F.max_gram_defect,
                               "frame_path_discrepancy": F.path_discrepancy,
                               "position_path_discrepancy": R.path_discrepancy,
                               "renormalized": renorm, "orientation": F.orientation}
        run.check("drift", F.max_gram_defect, tols["drift"])
        zio.write_mesh(run.out / "mesh.csv", R.patch)
        zio.write_obj(run.out / "mesh.obj", R.patch, drop)
        try:
            rep = verify_reconstruction(R, mu, nu, {k: tols["reconstruction"]
                                                    for k in ("E", "G", "H", "K", "kappa")})
        except ZMCError as exc:
            # non-integrable input can leave the timelike gauge; keep the mesh, flag the check
            run.fail("reconstruction", exc)
        else:
            for name, c in rep["checks"].items():
                run.check(f"reconstruction_{name}", c["max_error"], c["tol"])
    finally:
        run.write()
    return EXIT_OK


def _field_or_fail(path, what):
    if not path:
        raise ValidationError(f"pde source 'fields' needs {what}")
    return zio.read_field(path)


def cmd_pde(args, cfg):
    kind = cfg.get("kind", SystemKind.TIMELIKE)
    source = cfg.get("source", "moore" if kind is SystemKind.TIMELIKE else "constant")
    tols = _tolerances(args, cfg)
    params = {"kind": kind.value, "source": source, "tol": tols}
    if kind is SystemKind.TIMELIKE:
        if source != "moore":
            raise ValidationError("the timelike system takes Cauchy data from source 'moore'")
        p, v_range = _moore_params(cfg)
        n_u, n_v = _grid_size(args, cfg, (201, 201))
        params["moore"] = {**p.as_dict(), "v_range": list(v_range)}
        run = Run("pde", args.out, params)
        try:
            mc = moore_cauchy_data(p, n_u, n_v, v_range)
            ref = mc.reference
            run.report["grid"] = ref.grid.as_dict()
            X, Y = solve_hyperbolic(mc.data, mc.steps, mc.h_u, kind, boundary=mc.boundary)
            err = max(np.max(np.abs(X.values - ref.fields["X"].values)),
                      np.max(np.abs(Y.values - ref.fields["Y"].values)))
            run.check("moore_recovery", err, tols["recovery"])
            _pde_outputs(run, X, Y, kind, tols)
        finally:
            run.write()
        return EXIT_OK
    # elliptic systems
    if source == "constant":
        n_u, n_v = _grid_size(args, cfg, (41, 41))
        (u1, v1) = cfg.get("extent", (1.0, 1.0))
        grid = Grid(0.0, u1, 0.0, v1, n_u, n_v)
        bx, by = cfg.get("boundary", (0.0, 0.0))
        X0 = GridField(np.full(grid.shape, bx), grid, "X")
        Y0 = GridField(np.full(grid.shape, by), grid, "Y")
        params["boundary"] = [bx, by]
        params["extent"] = [u1, v1]
    elif source == "fields":
        X0 = _field_or_fail(cfg.get("X"), "X")
        Y0 = _field_or_fail(cfg.get("Y"), "Y")
        if X0.grid != Y0.grid:
            raise ValidationError("X and Y fields are on different grids")
        grid = X0.grid
        params.update(X=cfg["X"], Y=cfg["Y"])
    else:
        raise ValidationError(f"unknown pde source {source!r} (use 'constant' or 'fields')")
    damping = cfg.get("damping", 0.8)
    max_iter = cfg.get("max_iter", 100000)
    params.update(damping=damping, max_iter=max_iter)
    run = Run("pde", args.out, params)
    run.report["grid"] = grid.as_dict()
    try:
        try:
            X, Y, conv = solve_elliptic(X0, Y0, kind, damping=damping, max_iter=max_iter)
        except NoConvergence as exc:
            run.report["convergence"] = exc.report.as_dict() if exc.report else None
            if exc.X is not None:
                _pde_outputs(run, exc.X, exc.Y, kind, tols)
            raise
        run.report["convergence"] = conv.as_dict()
        _pde_outputs(run, X, Y, kind, tols)
    finally:
        run.write()
    return EXIT_OK


def _pde_outputs(run, X, Y, kind, tols):
    zio.write_field(run.out / "X.csv", GridField(X.values, X.grid, "X"))
    zio.write_field(run.out / "Y.csv", GridField(Y.values, Y.grid, "Y"))
    r1, r2 = residual_XY(X, Y, kind)
    worst = max(run.residual("XY_1", r1.values)["max"], run.residual("XY_2", r2.values)["max"])
    run.check("pde_residual", worst, tols["pde"])


def cmd_export(args, cfg):
    mesh = args.mesh or cfg.get("mesh")
    if not mesh:
        raise ValidationError("export needs a mesh CSV")
    drop = _project(args, cfg)
    patch = zio.read_mesh(mesh)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    zio.write_obj(out / (Path(mesh).stem + ".obj"), patch, drop)
    return EXIT_OK


COMMANDS = {"moore": cmd_moore, "verify": cmd_verify, "reconstruct": cmd_reconstruct,
            "pde": cmd_pde, "export": cmd_export}


def build_parser():
    parser = argparse.ArgumentParser(prog="zmcsurf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--out", default=".", help="output directory")
        if grid:
            sp.add_argument("--grid", help="grid size NUxNV")
            sp.add_argument("--tol", type=float, help="override every check tolerance")
        return sp

    sp = common(sub.add_parser("moore", help="generate the ZMC Moore surface and its invariants"))
    sp.add_argument("--project", choices=zio.AXES)
    sp = common(sub.add_parser("verify", help="check a sampled surface"))
    sp.add_argument("mesh", nargs="?")
    sp = common(sub.add_parser("reconstruct", help="rebuild a surface from (mu, nu)"))
    sp.add_argument("mu", nargs="?")
    sp.add_argument("nu", nargs="?")
    sp.add_argument("--path-check", action="store_true", help="dual-path integration report")
    sp.add_argument("--renorm", action="store_true", help="re-orthonormalize the frame")
    sp.add_argument("--project", choices=zio.AXES)
    common(sub.add_parser("pde", help="solve one of the natural systems"))
    sp = common(sub.add_parser("export", help="project a mesh CSV to OBJ"), grid=False)
    sp.add_argument("mesh", nargs="?")
    sp.add_argument("--project", choices=zio.AXES)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        cfg = zio.load_config(args.config, SCHEMAS[args.command]) if args.config else {}
        return COMMANDS[args.command](args, cfg)
    except ValidationError as exc:
        line = ""
        if args.config and ":" not in str(exc).split(" ")[0]:
            for key in ("alpha", "beta", "A", "eps", "g_range"):
                if key in str(exc):
                    line = f"{args.config}:{zio.config_line(args.config, key)}: "
                    break
        print(f"error: {line}{exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, DriftExceeded) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ZMCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
