"""Clamped B-spline bases evaluated on a grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .curvedata import Grid
from .errors import InvalidKnots, RankDeficientBasis, ValidationError


def default_knots(n_interior: int) -> np.ndarray:
    """Equidistant interior knots ``i / (n_interior + 1)``, excluding 0 and 1."""
    if n_interior < 0:
        raise ValidationError("n_interior must be non-negative")
    return np.arange(1, n_interior + 1) / (n_interior + 1)


def clamped_knot_vector(degree: int, interior_knots) -> np.ndarray:
    interior = np.asarray(interior_knots, dtype=float).ravel()
    return np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])


def bspline_design(x, knots: np.ndarray, degree: int) -> np.ndarray:
    """Evaluate every B-spline of a clamped knot vector at ``x`` in [0, 1].

    Dense ``(len(x), len(knots) - degree - 1)`` matrix; at ``x == 1`` the
    last basis function equals one.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValidationError("B-splines are evaluated on [0, 1] only")
    return BSpline.design_matrix(x, np.asarray(knots, dtype=float), degree).toarray()


@dataclass(frozen=True, eq=False)
class BasisSystem:
    degree: int
    interior_knots: np.ndarray
    knots: np.ndarray
    Phi: np.ndarray
    grid: Grid

    @property
    def v(self) -> int:
        return self.Phi.shape[1]

    def evaluate(self, x) -> np.ndarray:
        """Basis values at arbitrary points in [0, 1], shape (len(x), v)."""
        return bspline_design(x, self.knots, self.degree)


def build_basis(grid: Grid, degree: int = 3, interior_knots=(0.5,)) -> BasisSystem:
    """Clamped B-spline system of the given degree on ``grid``."""
    if int(degree) != degree or degree < 1:
        raise ValidationError("degree must be an integer >= 1")
    degree = int(degree)
    interior = np.asarray(interior_knots, dtype=float).ravel()
    if interior.size:
        if np.any(interior <= 0.0) or np.any(interior >= 1.0):
            raise InvalidKnots("interior knots must lie strictly inside (0, 1)")
        if np.any(np.diff(interior) <= 0):
            raise InvalidKnots("interior knots must be strictly increasing (no duplicates)")
    v = degree + 1 + interior.size
    if grid.K < v:
        raise RankDeficientBasis(f"{grid.K} grid points cannot support a {v}-dimensional basis")
    knots = clamped_knot_vector(degree, interior)
    Phi = bspline_design(grid.t, knots, degree)
    if np.linalg.matrix_rank(Phi) < v:
        raise RankDeficientBasis("grid does not resolve every basis function")
    for arr in (interior, knots, Phi):
        arr.setflags(write=False)
    return BasisSystem(degree, interior, knots, Phi, grid)


def eval_coefficient_curve(basis: BasisSystem, coef) -> np.ndarray:
    """Curve ``Phi @ coef`` on the basis grid."""
    coef = np.asarray(coef, dtype=float)
    if coef.shape != (basis.v,):
        raise ValidationError(f"expected {basis.v} coefficients, got shape {coef.shape}")
    return basis.Phi @ coef
