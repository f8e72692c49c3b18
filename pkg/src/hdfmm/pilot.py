"""Ridge-penalized least-squares fits of the fixed-effect curves.

The pilot fit supplies residuals for covariance estimation, starting values
for the sampler, and the nested refits scored by BIC during selection.

Every visit of subject ``i`` shares the fixed-effect curve ``Phi @ theta_i``
with ``theta_i = B^T x_i + C^T w_i``, so the least-squares problem reduces to
the visit means projected on the spline space.  A Cholesky factor of the
(possibly GLS-weighted) Gram matrix ``Phi^T V^-1 Phi`` turns it into an
ordinary multi-response ridge regression with ``v`` responses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .curvedata import CurvePanel
from .splinebasis import BasisSystem


@dataclass(frozen=True)
class RandomEffectWeight:
    """Within-visit covariance ``sigma2 * I + Psi diag(lambdas) Psi^T`` up to scale."""

    Psi: np.ndarray
    lambdas: np.ndarray
    sigma2: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        Psi = np.asarray(self.Psi, dtype=float)
        scale = max(float(lam.max(initial=0.0)), 1.0)
        sigma2 = max(float(self.sigma2), 1e-10 * scale)
        # inverse of I + Psi Lam Psi^T / sigma2 is I - Psi H Psi^T
        H = np.linalg.inv(sigma2 * np.diag(1.0 / lam) + Psi.T @ Psi) if lam.size else np.zeros((0, 0))
        object.__setattr__(self, "Psi", Psi)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "_H", H)

    def apply(self, A: np.ndarray) -> np.ndarray:
        """``V^-1 A`` for a K-row matrix ``A``."""
        return A - self.Psi @ (self._H @ (self.Psi.T @ A))

    def quad_sum(self, R: np.ndarray) -> float:
        """Sum over rows ``r`` of ``r^T V^-1 r``."""
        RP = R @ self.Psi
        return float(np.sum(R * R) - np.sum((RP @ self._H) * RP))


@dataclass(frozen=True)
class PilotFit:
    coef_x: np.ndarray  # (len(columns), v)
    coef_w: np.ndarray  # (q, v)
    columns: np.ndarray
    theta: np.ndarray  # (I, v) per-subject spline coefficients
    fitted: np.ndarray  # (I, K) fixed-effect curves
    rss: float
    n_obs: int
    df: int

    def bic(self) -> float:
        n = self.n_obs
        return n * np.log(max(self.rss, 1e-300) / n) + self.df * np.log(n)


def ridge_solve(D: np.ndarray, Yt: np.ndarray, ridge: float) -> np.ndarray:
    """Multi-response ridge ``argmin ||Yt - D B||^2 + kappa ||B||^2``.

    ``kappa = ridge * trace(D^T D) / ncol``; uses the dual form when D is wide.
    """
    n_rows, n_col = D.shape
    if n_col == 0:
        return np.zeros((0, Yt.shape[1]))
    kappa = ridge * float(np.sum(D * D)) / n_col
    if n_col <= n_rows:
        A = D.T @ D
        A[np.diag_indices_from(A)] += kappa
        return linalg.solve(A, D.T @ Yt, assume_a="pos")
    A = D @ D.T
    A[np.diag_indices_from(A)] += kappa
    return D.T @ linalg.solve(A, Yt, assume_a="pos")


def ridge_fit(panel: CurvePanel, basis: BasisSystem, columns=None, *, ridge: float = 1e-4,
              weight: RandomEffectWeight | None = None) -> PilotFit:
    """Fit ``Y_ij = Phi (B^T x_i + C^T w_i) + error`` by ridge least squares.

    ``columns`` selects predictors of ``panel.X`` (all by default); every
    covariate in ``panel.W`` is always included.  With ``weight`` the loss is
    the GLS form under the given random-effect covariance.
    """
    I, J, K = panel.Y.shape
    cols = np.arange(panel.p) if columns is None else np.asarray(columns, dtype=int).ravel()
    D = np.column_stack([panel.X[:, cols], panel.W])
    Phi = basis.Phi
    Ybar = panel.Y.mean(axis=1)

    WPhi = Phi if weight is None else weight.apply(Phi)
    M = Phi.T @ WPhi
    Lm = linalg.cholesky(M, lower=True)
    proj = Ybar @ WPhi  # (I, v)
    Yt = linalg.solve_triangular(Lm, proj.T, lower=True).T
    Bt = ridge_solve(D, Yt, ridge)
    coef = linalg.solve_triangular(Lm.T, Bt.T, lower=False).T

    theta = D @ coef
    fitted = theta @ Phi.T
    R = (panel.Y - fitted[:, None, :]).reshape(I * J, K)
    rss = float(np.sum(R * R)) if weight is None else weight.quad_sum(R)
    return PilotFit(coef[: cols.size], coef[cols.size:], cols, theta, fitted, rss, I * J * K, D.shape[1] * basis.v)
