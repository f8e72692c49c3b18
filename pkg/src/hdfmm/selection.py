"""Marker ranking by group norm, BIC cutoff, spline-degree choice, and
replicate-level power / type-I metrics."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .curvedata import CurvePanel
from .errors import ValidationError
from .fpca import FpcaResult
from .pilot import RandomEffectWeight, ridge_fit
from .splinebasis import BasisSystem, build_basis


@dataclass(frozen=True)
class RankedMarkers:
    """Markers sorted by decreasing strength.

    ``order[k]`` is the marker at rank ``k``; ``selected[k]`` says whether that
    rank made the cutoff (always a prefix of ``order``).  ``columns[m]`` lists
    the predictor columns that belong to marker ``m``.
    """

    order: np.ndarray
    norms: np.ndarray
    selected: np.ndarray
    columns: tuple
    bic_path: np.ndarray = None
    names: tuple = ()

    @property
    def n_selected(self) -> int:
        return int(self.selected.sum())

    @property
    def selected_markers(self) -> np.ndarray:
        return self.order[self.selected]

    def top(self, s: int) -> np.ndarray:
        return self.order[:s]


def rank_groups(group_norms, gwas_pairing=None, names: Sequence[str] = ()) -> RankedMarkers:
    """Rank markers by group L2 norm (stable: ties keep the original order).

    ``group_norms`` may be a :class:`PosteriorSummary` or a plain vector.
    With ``gwas_pairing`` (rows of ``(additive_col, dominant_col)``) a marker
    scores the larger of its two norms.
    """
    norms = np.asarray(getattr(group_norms, "group_norms", group_norms), dtype=float)
    if gwas_pairing is None:
        columns = tuple((m,) for m in range(norms.size))
        marker_norms = norms.copy()
    else:
        pairing = np.asarray(gwas_pairing, dtype=int).reshape(-1, 2)
        columns = tuple(tuple(int(c) for c in row) for row in pairing)
        marker_norms = norms[pairing].max(axis=1)
    order = np.argsort(-marker_norms, kind="stable")
    return RankedMarkers(order, marker_norms[order], np.zeros(order.size, dtype=bool), columns,
                         None, tuple(names))


def _weight_from(fpca: FpcaResult | None, sigma2=None, lambdas=None) -> RandomEffectWeight | None:
    if fpca is None or fpca.L == 0:
        return None
    lam = fpca.lambdas if lambdas is None else lambdas
    s2 = fpca.sigma2_nugget if sigma2 is None else sigma2
    return RandomEffectWeight(fpca.Psi, lam, s2)


def bic_path(panel: CurvePanel, basis: BasisSystem, ranked: RankedMarkers, fpca: FpcaResult | None = None,
             *, max_markers: int | None = None, sigma2=None, lambdas=None, ridge: float = 1e-4) -> np.ndarray:
    """BIC of the nested models holding the top 0, 1, ..., p* markers.

    Fixed effects are refit by ridge GLS with the random-effect covariance
    ``sigma2 I + Psi diag(lambdas) Psi^T`` held fixed (profiled over scale);
    ``BIC = n log(RSS/n) + df log(n)`` with ``n = IJK`` and ``df`` counting
    spline coefficients.  Covariates are in every model.
    """
    weight = _weight_from(fpca, sigma2, lambdas)
    n_markers = ranked.order.size
    p_star = n_markers if max_markers is None else min(max_markers, n_markers)
    n = panel.I * panel.J * panel.K
    out = np.empty(p_star + 1)
    cols: list[int] = []
    for s in range(p_star + 1):
        if s > 0:
            cols.extend(ranked.columns[ranked.order[s - 1]])
        fit = ridge_fit(panel, basis, cols, ridge=ridge, weight=weight)
        df = len(cols) * basis.v + panel.q * basis.v
        out[s] = n * np.log(max(fit.rss, 1e-300) / n) + df * np.log(n)
    return out


def bic_stepwise(panel: CurvePanel, basis: BasisSystem, fpca: FpcaResult | None, ranked: RankedMarkers,
                 **kw) -> RankedMarkers:
    """Attach the BIC path and select the prefix with minimal BIC (ties -> fewer)."""
    path = bic_path(panel, basis, ranked, fpca, **kw)
    s_star = int(np.argmin(path))  # argmin returns the first minimum
    selected = np.zeros(ranked.order.size, dtype=bool)
    selected[:s_star] = True
    return replace(ranked, selected=selected, bic_path=path)


def select_top(ranked: RankedMarkers, s: int) -> RankedMarkers:
    selected = np.zeros(ranked.order.size, dtype=bool)
    selected[:s] = True
    return replace(ranked, selected=selected)


def choose_degree(panel: CurvePanel, candidate_degrees: Iterable[int], fixed_knots=(0.5,), *,
                  ridge: float = 1e-8, return_bic: bool = False):
    """Spline degree with minimal pilot-fit BIC (ties -> lower degree)."""
    degrees = sorted(int(d) for d in candidate_degrees)
    if not degrees:
        raise ValidationError("need at least one candidate degree")
    if len(degrees) == 1:
        return (degrees[0], {degrees[0]: np.nan}) if return_bic else degrees[0]
    bics = {}
    for d in degrees:
        basis = build_basis(panel.grid, d, fixed_knots)
        bics[d] = ridge_fit(panel, basis, ridge=ridge).bic()
    best = min(degrees, key=lambda d: (bics[d], d))
    return (best, bics) if return_bic else best


@dataclass(frozen=True)
class ReplicateMetrics:
    n_replicates: int
    strict_power: float
    type1_error: float
    individual_power: dict  # marker -> fraction

    def as_row(self, truth_order: Sequence[int]) -> list[float]:
        return [self.strict_power, self.type1_error] + [self.individual_power[m] for m in truth_order]


def replicate_metrics(truth: Iterable[int], selections: Sequence[Iterable[int]], p1: int) -> ReplicateMetrics:
    """Strict power, mean type-I error and per-marker power across replicates."""
    truth = [int(m) for m in truth]
    truth_set = set(truth)
    if not selections:
        raise ValidationError("need at least one replicate")
    n_noise = p1 - len(truth_set)
    strict, type1 = [], []
    hits = {m: 0 for m in truth}
    for sel in selections:
        sel = {int(m) for m in sel}
        strict.append(truth_set <= sel)
        type1.append(len(sel - truth_set) / n_noise if n_noise > 0 else 0.0)
        for m in truth:
            hits[m] += m in sel
    R = len(selections)
    return ReplicateMetrics(R, float(np.mean(strict)), float(np.mean(type1)),
                            {m: hits[m] / R for m in truth})
