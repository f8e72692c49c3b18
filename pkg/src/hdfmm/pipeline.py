"""End-to-end fitting: basis -> pilot fit -> FPCA -> Gibbs -> ranking/BIC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvedata import CurvePanel
from .fpca import CovarianceSurface, FpcaResult, eigendecompose_truncate, empirical_residual_cov, sandwich_smooth
from .gibbs import ChainResult, PriorConfig, run_chain
from .pilot import PilotFit, ridge_fit
from .selection import RankedMarkers, bic_stepwise, rank_groups, select_top
from .splinebasis import BasisSystem, build_basis, default_knots


@dataclass(frozen=True)
class FitSettings:
    degree: int = 3
    n_interior_knots: int = 1
    tau_total: float = 0.90
    tau_incr: float = 0.01
    fixed_L: int | None = None
    smoother_dim: int | None = None
    cov_source: str = "within"  # "within" (visit deviations) or "pilot" (ridge residuals)
    pilot_ridge: float = 1e-4
    n_burn: int = 1000
    n_keep: int = 1000
    sigma2_rule: str = "joint"
    priors: PriorConfig = field(default_factory=PriorConfig)
    max_markers: int | None = 50
    top_k: int = 5


@dataclass
class FitOutput:
    basis: BasisSystem
    pilot: PilotFit
    surface: CovarianceSurface
    fpca: FpcaResult
    chain: ChainResult


def raw_covariance(panel: CurvePanel, pilot: PilotFit, source: str = "within") -> np.ndarray:
    """Raw covariance of the visit-level deviations.

    ``"within"`` uses deviations from each subject's visit mean, rescaled by
    ``J / (J - 1)``; it is unbiased whatever the fixed effects are because
    those are shared by all visits of a subject.  ``"pilot"`` uses residuals
    from the ridge pilot fit.  ``"within"`` falls back to ``"pilot"`` when J=1.
    """
    I, J, K = panel.Y.shape
    if source == "within" and J >= 2:
        R = (panel.Y - panel.Y.mean(axis=1, keepdims=True)).reshape(I * J, K)
        return R.T @ R / (I * (J - 1))
    if source not in ("within", "pilot"):
        raise ValueError(f"unknown covariance source {source!r}")
    return empirical_residual_cov(panel, pilot.fitted)


def fit_panel(panel: CurvePanel, settings: FitSettings = FitSettings(), seed: int = 0) -> FitOutput:
    basis = build_basis(panel.grid, settings.degree, default_knots(settings.n_interior_knots))
    pilot = ridge_fit(panel, basis, ridge=settings.pilot_ridge)
    raw = raw_covariance(panel, pilot, settings.cov_source)
    surface = sandwich_smooth(raw, settings.smoother_dim)
    fpca = eigendecompose_truncate(surface, settings.tau_total, settings.tau_incr, L=settings.fixed_L)
    chain = run_chain(panel, basis, fpca, settings.priors, settings.n_burn, settings.n_keep, seed,
                      pilot=pilot, sigma2_rule=settings.sigma2_rule)
    return FitOutput(basis, pilot, surface, fpca, chain)


def select_markers(panel: CurvePanel, fit: FitOutput, pairing=None, names=(), *,
                   max_markers: int | None = 50) -> RankedMarkers:
    """Rank by posterior-mean group norms, then cut with BIC."""
    s = fit.chain.summary
    ranked = rank_groups(s.group_norms, pairing, names)
    return bic_stepwise(panel, fit.basis, fit.fpca, ranked, max_markers=max_markers,
                        sigma2=s.sigma2_mean, lambdas=s.lambdas_mean)


def selections_both_rules(ranked: RankedMarkers, top_k: int = 5) -> dict:
    return {
        "bic": [int(m) for m in ranked.selected_markers],
        "top": [int(m) for m in select_top(ranked, top_k).selected_markers],
    }
