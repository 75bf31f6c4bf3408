"""Timelike zero-mean-curvature surfaces in Minkowski 4-space.

Construction of rotational examples of Moore type, invariant extraction in
the geometric frame, residuals and solvers for the natural PDE systems, and
reconstruction of a surface from its two invariant functions.
"""

__version__ = "0.1.0"
