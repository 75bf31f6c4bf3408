"""Text file formats: grid fields, meshes, OBJ projections, JSON reports and configs.

Numbers are written with repr-exact precision (17 significant digits), so
reading a file and writing it again reproduces it byte for byte.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FileFormatError, ValidationError
from .geometry import SurfacePatch
from .grid import Grid, GridField

NUM = "%.17g"
GRID_KEYS = ("n_u", "n_v", "u_min", "u_max", "v_min", "v_max")
MESH_HEADER = "u,v,x1,x2,x3,x4"
FIELD_HEADER = "u,v,value"
AXES = ("x1", "x2", "x3", "x4")


def _fmt(x):
    return NUM % x


def _meta_lines(grid, extra):
    meta = {**(extra or {}), **grid.as_dict()}
    return [f"# {k}: {_fmt(meta[k])}" if isinstance(meta[k], (float, np.floating))
            else f"# {k}: {meta[k]}" for k in sorted(meta)]


def _write_rows(path, grid, header, columns, extra):
    uu, vv = grid.mesh()
    cols = [uu.ravel(), vv.ravel()] + [np.asarray(c).ravel() for c in columns]
    lines = _meta_lines(grid, extra) + [header]
    lines += [",".join(_fmt(c[r]) for c in cols) for r in range(grid.n_u * grid.n_v)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_field(path, field, extra=None):
    """FieldFile: `#` metadata, header u,v,value, rows with v varying fastest."""
    _write_rows(path, field.grid, FIELD_HEADER, [field.values],
                {"name": field.name, **(extra or {})})


def write_mesh(path, patch, extra=None):
    pos = patch.positions
    _write_rows(path, patch.grid, MESH_HEADER, [pos[..., k] for k in range(4)],
                {"label": patch.label or "mesh", **(extra or {})})


def _parse_meta_value(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class _Table:
    grid: Grid
    meta: dict
    data: np.ndarray   # (n_u * n_v, n_columns - 2)


def _read_table(path, header):
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FileFormatError(f"{path}: cannot read ({exc.strerror})") from exc
    meta, k = {}, 0
    while k < len(lines) and lines[k].startswith("#"):
        key, sep, val = lines[k][1:].partition(":")
        if sep:
            meta[key.strip()] = _parse_meta_value(val.strip())
        k += 1
    missing = [key for key in GRID_KEYS if key not in meta]
    if missing:
        raise FileFormatError(f"{path}: missing grid metadata {', '.join(missing)}")
    try:
        grid = Grid(*(float(meta[key]) for key in GRID_KEYS[2:]),
                    int(meta["n_u"]), int(meta["n_v"]))
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: bad grid metadata ({exc})") from exc
    if k >= len(lines) or lines[k].strip() != header:
        raise FileFormatError(f"{path}:{k + 1}: expected header {header!r}")
    ncol = header.count(",") + 1
    rows = lines[k + 1:]
    want = grid.n_u * grid.n_v
    data = np.empty((want, ncol - 2))
    uu, vv = (a.ravel() for a in grid.mesh())
    tol = 1e-12 * max(1.0, abs(grid.u_max), abs(grid.u_min), abs(grid.v_max), abs(grid.v_min))
    for r in range(want):
        lineno = k + 2 + r
        if r >= len(rows):
            raise FileFormatError(f"{path}:{lineno}: file ends after {r} of {want} data rows")
        parts = rows[r].split(",")
        if len(parts) != ncol:
            raise FileFormatError(f"{path}:{lineno}: expected {ncol} columns, got {len(parts)}")
        try:
            vals = [float(x) for x in parts]
        except ValueError as exc:
            raise FileFormatError(f"{path}:{lineno}: {exc}") from exc
        if abs(vals[0] - uu[r]) > tol or abs(vals[1] - vv[r]) > tol:
            raise FileFormatError(f"{path}:{lineno}: (u, v) = ({parts[0]}, {parts[1]}) does not "
                                  "match the grid metadata (rows must be v-fastest)")
        data[r] = vals[2:]
    extra = [s for s in rows[want:] if s.strip()]
    if extra:
        raise FileFormatError(f"{path}:{k + 2 + want}: {len(extra)} unexpected trailing row(s)")
    return _Table(grid, meta, data)


def read_field(path):
    t = _read_table(path, FIELD_HEADER)
    return GridField(t.data[:, 0].reshape(t.grid.shape), t.grid, str(t.meta.get("name", "value")))


def read_mesh(path):
    t = _read_table(path, MESH_HEADER)
    pos = t.data.reshape(t.grid.n_u, t.grid.n_v, 4)
    return SurfacePatch(pos, t.grid, None, label=str(t.meta.get("label", "")))


def projection_axes(drop="x2"):
    if drop not in AXES:
        raise ValidationError(f"projection must drop one of {', '.join(AXES)}, not {drop!r}")
    return [k for k, a in enumerate(AXES) if a != drop]


def write_obj(path, patch, drop="x2"):
    """Projected mesh: `v x y z` vertex lines (one coordinate dropped) and quad faces."""
    keep = projection_axes(drop)
    n_u, n_v = patch.grid.shape
    pos = patch.positions.reshape(-1, 4)[:, keep]
    lines = [f"# zmcsurf mesh {n_u}x{n_v}, dropped {drop}"]
    lines += ["v " + " ".join(_fmt(c) for c in p) for p in pos]
    for i in range(n_u - 1):
        for j in range(n_v - 1):
            a = i * n_v + j + 1
            lines.append(f"f {a} {a + n_v} {a + n_v + 1} {a + 1}")
    Path(path).write_text("\n".join(lines) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def write_report(path, report):
    Path(path).write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")


def read_report(path):
    return json.loads(Path(path).read_text())


# -- configuration ------------------------------------------------------------

def _key_line(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def load_config(path, schema):
    """Read a JSON config and check it against ``schema`` (key -> converter).

    Nested sections use a dict as the converter.  Unknown keys and values the
    converter rejects raise ValidationError naming the file and line.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}:1: config must be a JSON object")
    return _check(raw, schema, text, str(path), "")


def _check(raw, schema, text, where, prefix):
    out = {}
    for key, val in raw.items():
        line = _key_line(text, key)
        if key not in schema:
            raise ValidationError(f"{where}:{line}: unknown key '{prefix}{key}' "
                                  f"(allowed: {', '.join(sorted(schema))})")
        conv = schema[key]
        if isinstance(conv, dict):
            if not isinstance(val, dict):
                raise ValidationError(f"{where}:{line}: '{prefix}{key}' must be an object")
            out[key] = _check(val, conv, text, where, f"{prefix}{key}.")
            continue
        try:
            out[key] = conv(val)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{where}:{line}: bad value for '{prefix}{key}': {exc}") from exc
    return out


def config_line(path, key):
    """Line number of ``key`` in a config file (0 when absent or unreadable)."""
    try:
        return _key_line(Path(path).read_text(), key)
    except OSError:
        return 0


def parse_grid(text):
    """'NUxNV' (or a two-element list) -> (n_u, n_v)."""
    if isinstance(text, (list, tuple)) and len(text) == 2:
        n_u, n_v = text
    else:
        m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", str(text))
        if not m:
            raise ValueError(f"grid must look like NUxNV, got {text!r}")
        n_u, n_v = m.groups()
    n_u, n_v = int(n_u), int(n_v)
    if n_u < 1 or n_v < 1:
        raise ValueError("grid sizes must be positive")
    return n_u, n_v
