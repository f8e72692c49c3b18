"""Covariance smoothing and functional principal components of the
visit-level deviations ``U_ij(t)``.

The raw covariance of pilot residuals is smoothed with a sandwich smoother
``S @ raw @ S.T`` (univariate penalized B-spline smoother, GCV-tuned), then
eigendecomposed.  Eigenfunctions are scaled to unit norm under the discrete
inner product ``<f, g> = mean_k f(t_k) g(t_k)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvedata import CurvePanel, Grid
from .errors import DegenerateCovariance, RankDeficientBasis, ValidationError
from .splinebasis import bspline_design, clamped_knot_vector, default_knots

GCV_GRID = np.logspace(-4, 4, 20)


@dataclass(frozen=True)
class CovarianceSurface:
    G_hat: np.ndarray
    lambda_smooth: float
    sigma2_nugget: float


@dataclass(frozen=True)
class FpcaResult:
    Psi: np.ndarray  # (K, L) eigenfunctions on the grid
    lambdas: np.ndarray  # (L,) descending
    L: int
    explained: np.ndarray  # (L,) per-component share of total variation
    sigma2_nugget: float = 0.0

    def reconstruct(self) -> np.ndarray:
        """Low-rank covariance ``Psi diag(lambdas) Psi^T`` on the grid."""
        return (self.Psi * self.lambdas) @ self.Psi.T


def empirical_residual_cov(panel: CurvePanel, fitted_fixed) -> np.ndarray:
    """Raw covariance ``(1/IJ) sum_ij r_ij r_ij^T`` of ``r = Y - fitted_fixed``.

    ``fitted_fixed`` may be (I, J, K) or subject-level (I, K).
    """
    fitted = np.asarray(fitted_fixed, dtype=float)
    I, J, K = panel.Y.shape
    if fitted.shape == (I, K):
        fitted = fitted[:, None, :]
    elif fitted.shape != (I, J, K):
        raise ValidationError(f"fitted values have shape {fitted.shape}, expected {(I, J, K)} or {(I, K)}")
    R = (panel.Y - fitted).reshape(I * J, K)
    return R.T @ R / (I * J)


def _second_difference_penalty(d: int) -> np.ndarray:
    D2 = np.diff(np.eye(d), n=2, axis=0)
    return D2.T @ D2


def penalized_smoother_family(K: int, basis_dim: int, t=None):
    """Return ``(eigvals, U)`` so that ``S(lam) = U diag(1/(1+lam*eigvals)) U^T``.

    The smoother is the cubic P-spline hat matrix ``B (B^T B + lam P)^-1 B^T``
    with a second-difference penalty, diagonalized once via the Demmler-Reinsch
    basis so every candidate ``lam`` costs a rescaling only.  The penalty is
    normalized by ``trace(B^T B) / trace(P)`` so ``lam`` is unit-free.
    """
    if basis_dim > K:
        raise RankDeficientBasis(f"smoother basis dimension {basis_dim} exceeds K={K}")
    if basis_dim < 4:
        raise ValidationError("smoother needs at least 4 cubic basis functions")
    t = Grid.midpoints(K).t if t is None else np.asarray(t, dtype=float)
    # map the grid onto [0, 1] exactly so clamped knots cover it
    span = t[-1] - t[0]
    x = (t - t[0]) / span if span > 0 else np.zeros_like(t)
    B = bspline_design(x, clamped_knot_vector(3, default_knots(basis_dim - 4)), 3)
    BtB = B.T @ B
    P = _second_difference_penalty(basis_dim)
    P *= np.trace(BtB) / np.trace(P)
    # B^T B = R^T R;  S(lam) = B R^-1 (I + lam R^-T P R^-1)^-1 R^-T B^T
    R = np.linalg.cholesky(BtB).T
    Rinv = np.linalg.inv(R)
    eigvals, V = np.linalg.eigh(Rinv.T @ P @ Rinv)
    eigvals = np.clip(eigvals, 0.0, None)
    U = B @ Rinv @ V  # orthonormal columns
    return eigvals, U


def sandwich_smooth(raw_cov, basis_dim: int | None = None, *, impute_diagonal: bool = True,
                    lambdas=GCV_GRID) -> CovarianceSurface:
    """Smooth a raw covariance matrix as ``S raw S^T`` with GCV-chosen ``S``.

    With ``impute_diagonal`` the diagonal (inflated by measurement error) is
    treated as missing: it is replaced by the mean of its two neighbouring
    off-diagonals and then refined by a few smooth-and-refill passes.  The
    nugget is the mean gap between the raw and smoothed diagonals.
    """
    raw = np.asarray(raw_cov, dtype=float)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise ValidationError("raw covariance must be square")
    if not np.allclose(raw, raw.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(raw).max())):
        raise ValidationError("raw covariance must be symmetric")
    K = raw.shape[0]
    if basis_dim is None:
        basis_dim = max(4, min(35, K // 2))
    if basis_dim > K:
        raise RankDeficientBasis(f"smoother basis dimension {basis_dim} exceeds K={K}")
    eigvals, U = penalized_smoother_family(K, basis_dim)

    target = 0.5 * (raw + raw.T)
    if impute_diagonal and K > 2:
        target = target.copy()
        off = np.diagonal(target, 1)
        fill = np.empty(K)
        fill[1:-1] = 0.5 * (off[:-1] + off[1:])
        fill[0], fill[-1] = off[0], off[-1]
        np.fill_diagonal(target, fill)

    def smooth(M, lam):
        shrink = 1.0 / (1.0 + lam * eigvals)
        core = (U.T @ M @ U) * np.outer(shrink, shrink)
        return U @ core @ U.T

    def gcv_pick(M):
        best, best_score = None, np.inf
        # ascending lam; "<=" keeps the larger lam on ties
        for lam in lambdas:
            df = np.sum(1.0 / (1.0 + lam * eigvals))
            resid = M - smooth(M, lam)
            score = np.sum(resid * resid) / (1.0 - df * df / (K * K)) ** 2
            if score <= best_score * (1 + 1e-12):
                best, best_score = lam, score
        return best

    lam = gcv_pick(target)
    G = smooth(target, lam)
    if impute_diagonal and K > 2:
        for _ in range(5):
            np.fill_diagonal(target, np.diagonal(G))
            G = smooth(target, lam)
    G = 0.5 * (G + G.T)
    nugget = max(0.0, float(np.mean(np.diagonal(raw) - np.diagonal(G))))

    w, V = np.linalg.eigh(G)
    w = np.clip(w, 0.0, None)
    G_psd = (V * w) @ V.T
    G_psd = 0.5 * (G_psd + G_psd.T)
    return CovarianceSurface(G_psd, float(lam), nugget)


def truncation_level(props: np.ndarray, tau_total: float, tau_incr: float) -> int:
    """Smallest L whose cumulative share exceeds ``tau_total`` and beyond which
    no further component explains ``tau_incr`` or more."""
    n = props.size
    cum = np.cumsum(props)
    hit = np.flatnonzero(cum > tau_total - 1e-12)
    L_total = int(hit[0]) + 1 if hit.size else n
    big = np.flatnonzero(props >= tau_incr)
    L_incr = int(big[-1]) + 1 if big.size else 0
    return max(1, min(n, max(L_total, L_incr)))


def eigendecompose_truncate(surface: CovarianceSurface, tau_total: float = 0.90,
                            tau_incr: float = 0.01, L: int | None = None) -> FpcaResult:
    """Eigenfunctions and eigenvalues of the smoothed covariance operator.

    ``L`` overrides the threshold rule when given.
    """
    if not 0 < tau_incr < tau_total <= 1:
        raise ValidationError("need 0 < tau_incr < tau_total <= 1")
    G = surface.G_hat
    K = G.shape[0]
    w, V = np.linalg.eigh(G)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    tol = 1e-12 * max(abs(w[0]), 1e-300)
    positive = w > tol
    n_pos = int(positive.sum())
    if n_pos == 0:
        raise DegenerateCovariance("smoothed covariance has no positive eigenvalues")
    w_pos = w[:n_pos]
    props = w_pos / w_pos.sum()
    if L is None:
        L = truncation_level(props, tau_total, tau_incr)
    L = int(min(max(L, 1), n_pos))
    Psi = V[:, :L] * np.sqrt(K)
    # deterministic sign: largest-magnitude entry of each eigenfunction positive
    flip = np.sign(Psi[np.argmax(np.abs(Psi), axis=0), np.arange(L)])
    Psi = Psi * flip
    return FpcaResult(Psi, w_pos[:L] / K, L, props[:L], surface.sigma2_nugget)


def estimate_fpca(panel: CurvePanel, fitted_fixed, *, tau_total=0.90, tau_incr=0.01,
                  basis_dim=None, L=None) -> tuple[CovarianceSurface, FpcaResult]:
    """Raw residual covariance -> sandwich smoothing -> truncated eigenbasis."""
    raw = empirical_residual_cov(panel, fitted_fixed)
    surface = sandwich_smooth(raw, basis_dim)
    return surface, eigendecompose_truncate(surface, tau_total, tau_incr, L=L)
