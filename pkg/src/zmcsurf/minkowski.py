"""Linear algebra in Minkowski 4-space with signature (3,1).

Vectors are numpy arrays whose last axis holds the coordinates
(x1, x2, x3, x4); x4 is the timelike coordinate.  A frame is an array of
shape (..., 4, 4) whose rows are the frame vectors, by default in the
order (x, y, n1, n2) with target Gram diagonal (-1, 1, 1, 1).
"""

from __future__ import annotations

from enum import Enum

import numpy as np

ETA = np.diag([1.0, 1.0, 1.0, -1.0])
FRAME_SIGNATURE = (-1.0, 1.0, 1.0, 1.0)
DEFAULT_CAUSAL_TOL = 1e-10


class CausalCharacter(str, Enum):
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"


def vec(x1, x2, x3, x4):
    return np.array([x1, x2, x3, x4], dtype=float)


def inner(a, b):
    """Minkowski product, broadcast over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
            + a[..., 2] * b[..., 2] - a[..., 3] * b[..., 3])


def causal_character(v, tol=DEFAULT_CAUSAL_TOL):
    if tol < 0:
        raise ValueError("tol must be non-negative")
    q = float(inner(v, v))
    if q < -tol:
        return CausalCharacter.TIMELIKE
    if q > tol:
        return CausalCharacter.SPACELIKE
    return CausalCharacter.LIGHTLIKE


def gram(frame):
    """Gram matrix G_ij = <f_i, f_j> of a frame (..., 4, 4)."""
    frame = np.asarray(frame, dtype=float)
    return np.einsum("...ia,ab,...jb->...ij", frame, ETA, frame)


def gram_defect(frame, signature=FRAME_SIGNATURE):
    """Max deviation of the ten independent Gram entries from the target.

    For a stack of frames the maximum over the whole stack is returned.
    """
    g = gram(frame)
    target = np.diag(np.asarray(signature, dtype=float))
    iu = np.triu_indices(4)
    return float(np.max(np.abs(g - target)[..., iu[0], iu[1]]))


def gram_defect_field(frame, signature=FRAME_SIGNATURE):
    """Per-frame version of :func:`gram_defect` (returns shape ``frame.shape[:-2]``)."""
    g = gram(frame)
    target = np.diag(np.asarray(signature, dtype=float))
    iu = np.triu_indices(4)
    return np.max(np.abs(g - target)[..., iu[0], iu[1]], axis=-1)


def boost(t, timelike_axis=3, spacelike_axis=0):
    """Hyperbolic rotation by rapidity ``t`` in a timelike-spacelike coordinate plane."""
    L = np.eye(4)
    ch, sh = np.cosh(t), np.sinh(t)
    i, j = spacelike_axis, timelike_axis
    L[i, i] = ch
    L[j, j] = ch
    L[i, j] = sh
    L[j, i] = sh
    return L


def rotation(theta, i=0, j=1):
    """Euclidean rotation in the spacelike coordinate plane (i, j)."""
    if 3 in (i, j):
        raise ValueError("rotation planes must be spacelike; use boost() for x4")
    R = np.eye(4)
    c, s = np.cos(theta), np.sin(theta)
    R[i, i] = c
    R[j, j] = c
    R[i, j] = -s
    R[j, i] = s
    return R


def apply(L, v):
    """Apply a linear map (4x4) to vectors or frames stored on the last axis."""
    return np.einsum("ab,...b->...a", L, np.asarray(v, dtype=float))


def is_isometry(L, tol=1e-12):
    L = np.asarray(L, dtype=float)
    return bool(np.max(np.abs(L.T @ ETA @ L - ETA)) < tol)


def standard_frame():
    """The frame (e4, e1, e2, e3): timelike vector first."""
    return np.array([[0.0, 0.0, 0.0, 1.0],
                     [1.0, 0.0, 0.0, 0.0],
                     [0.0, 1.0, 0.0, 0.0],
                     [0.0, 0.0, 1.0, 0.0]])


def orthonormalize(frame, signature=FRAME_SIGNATURE):
    """Metric Gram-Schmidt of the rows of ``frame`` against the target signature.

    Each row is projected off the previous ones and rescaled to |<f,f>| = 1;
    the sign of <f,f> is trusted to match ``signature``.
    """
    frame = np.array(frame, dtype=float)
    out = np.empty_like(frame)
    for k in range(4):
        w = frame[..., k, :].copy()
        for j in range(k):
            w = w - (inner(w, out[..., j, :]) * signature[j])[..., None] * out[..., j, :]
        q = inner(w, w)
        out[..., k, :] = w / np.sqrt(np.abs(q))[..., None]
    return out


def det4(frame):
    return np.linalg.det(np.asarray(frame, dtype=float))
