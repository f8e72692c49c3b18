"""Blocked Gibbs sampler for the Bayesian group-lasso functional mixed model.

Model on the grid, for subject i and visit j::

    Y_ij = Phi (B^T x_i + C^T w_i) + Psi zeta_ij + eps_ij,   eps ~ N(0, s2 I)

Priors::

    b_m | s2, tau2_m   ~ N(0, s2 tau2_m I_v)
    tau2_m | lamR2     ~ Gamma(shape=(v+1)/2, rate=v lamR2 / 2)
    lamR2              ~ Gamma(shape=a1R, rate=a2R)
    c_r | s2           ~ N(0, s2 * scale * I_v)
    zeta_ijl | lam_l   ~ N(0, lam_l),   lam_l ~ InvGamma(a1l, a2l)
    p(s2)              ~ 1 / s2

Integrating ``tau2_m`` out gives the multivariate Laplace prior on each
group.  All spline-space updates work on per-subject sufficient statistics:
``theta_i = B^T x_i + C^T w_i`` and ``E_i = Phi^T sum_j (Y_ij - Psi zeta_ij)
- J G theta_i`` with ``G = Phi^T Phi``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import linalg

from .curvedata import CurvePanel
from .errors import ChainDiverged, NumericalFailure, ValidationError
from .fpca import FpcaResult
from .pilot import PilotFit, ridge_fit
from .splinebasis import BasisSystem

log = logging.getLogger(__name__)

TAU_NORM_FLOOR = 1e-150
SIGMA2_FLOOR = 1e-12


@dataclass(frozen=True)
class PriorConfig:
    alpha1R: float = 0.01
    alpha2R: float = 0.01
    alpha1l: float = 0.01
    alpha2l: float = 0.01
    Sigma_cr_scale: float = 1.0

    def __post_init__(self):
        for name in ("alpha1R", "alpha2R", "alpha1l", "alpha2l", "Sigma_cr_scale"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"prior parameter {name} must be positive")


@dataclass
class ChainState:
    b: np.ndarray  # (p, v)
    c: np.ndarray  # (q, v)
    tau2: np.ndarray  # (p,)
    lambdaR2: float
    zeta: np.ndarray  # (I*J, L), row i*J + j
    lambdas: np.ndarray  # (L,)
    sigma2_eps: float

    def copy(self) -> "ChainState":
        return ChainState(self.b.copy(), self.c.copy(), self.tau2.copy(), float(self.lambdaR2),
                          self.zeta.copy(), self.lambdas.copy(), float(self.sigma2_eps))


class ModelData:
    """Panel, basis and eigenfunctions with the products every update reuses."""

    def __init__(self, panel: CurvePanel, basis: BasisSystem, Psi: np.ndarray):
        if basis.Phi.shape[0] != panel.K:
            raise ValidationError("basis grid does not match the panel grid")
        Psi = np.asarray(Psi, dtype=float).reshape(panel.K, -1)
        self.panel = panel
        self.I, self.J, self.K = panel.Y.shape
        self.p, self.q, self.v, self.L = panel.p, panel.q, basis.v, Psi.shape[1]
        self.Yflat = panel.Y.reshape(self.I * self.J, self.K)
        self.X = np.ascontiguousarray(panel.X)
        self.W = np.ascontiguousarray(panel.W)
        self.Phi = basis.Phi
        self.Psi = Psi
        self.G = self.Phi.T @ self.Phi
        self.PsiTPsi = Psi.T @ Psi
        self.PsiTPhi = Psi.T @ self.Phi  # (L, v)
        self.PhiY_sum = panel.Y.sum(axis=1) @ self.Phi  # (I, v)
        self.PsiY = self.Yflat @ Psi  # (IJ, L)
        self.sxx = self.J * np.sum(self.X**2, axis=0)
        self.sww = self.J * np.sum(self.W**2, axis=0)
        self.n_obs = self.I * self.J * self.K


@dataclass
class Cache:
    theta: np.ndarray  # (I, v)
    E: np.ndarray  # (I, v)

    @classmethod
    def fresh(cls, state: ChainState, data: ModelData) -> "Cache":
        theta = data.X @ state.b + data.W @ state.c
        zsum = state.zeta.reshape(data.I, data.J, data.L).sum(axis=1)
        E = data.PhiY_sum - zsum @ data.PsiTPhi - data.J * theta @ data.G
        return cls(np.ascontiguousarray(theta), np.ascontiguousarray(E))


# conditional distributions -------------------------------------------------


def b_conditional(m: int, state: ChainState, data: ModelData, cache: Cache):
    """Mean and covariance of ``b_m`` given everything else."""
    xm = data.X[:, m]
    tau2, s2 = state.tau2[m], state.sigma2_eps
    s = xm @ cache.E + data.sxx[m] * (data.G @ state.b[m])
    A = np.eye(data.v) + tau2 * data.sxx[m] * data.G
    Ainv = np.linalg.inv(A)
    return Ainv @ (tau2 * s), s2 * tau2 * Ainv


def c_conditional(r: int, state: ChainState, data: ModelData, cache: Cache, priors: PriorConfig):
    wr = data.W[:, r]
    s = wr @ cache.E + data.sww[r] * (data.G @ state.c[r])
    A = np.eye(data.v) / priors.Sigma_cr_scale + data.sww[r] * data.G
    Ainv = np.linalg.inv(A)
    return Ainv @ s, state.sigma2_eps * Ainv


def tau2_conditional(state: ChainState, data: ModelData):
    """Inverse-Gaussian ``(mean, shape)`` of ``1 / tau2_m`` for every group."""
    bb = np.maximum(np.sum(state.b**2, axis=1), TAU_NORM_FLOOR**2)
    shape = data.v * state.lambdaR2
    return np.sqrt(shape * state.sigma2_eps / bb), np.full(data.p, shape)


def lambdaR2_conditional(state: ChainState, data: ModelData, priors: PriorConfig):
    """Gamma ``(shape, rate)``."""
    shape = priors.alpha1R + (data.v * data.p + data.p) / 2.0
    rate = priors.alpha2R + data.v * float(np.sum(state.tau2)) / 2.0
    return shape, rate


def zeta_conditional(state: ChainState, data: ModelData, cache: Cache):
    """Means (IJ, L) and the shared covariance (L, L) of the score vectors."""
    Omega = data.PsiTPsi + state.sigma2_eps * np.diag(1.0 / state.lambdas)
    Oinv = np.linalg.inv(Omega)
    resid = data.PsiY - np.repeat(cache.theta @ data.PsiTPhi.T, data.J, axis=0)
    return resid @ Oinv, state.sigma2_eps * Oinv


def lambdas_conditional(state: ChainState, data: ModelData, priors: PriorConfig):
    """Inverse-Gamma ``(shape, scale)`` for each eigenvalue."""
    shape = np.full(data.L, priors.alpha1l + 0.5 * data.I * data.J)
    scale = priors.alpha2l + 0.5 * np.sum(state.zeta**2, axis=0)
    return shape, scale


def residual_sum_squares(state: ChainState, data: ModelData, cache: Cache | None = None) -> float:
    theta = cache.theta if cache is not None else data.X @ state.b + data.W @ state.c
    F = theta @ data.Phi.T
    R = data.panel.Y - F[:, None, :] - (state.zeta @ data.Psi.T).reshape(data.I, data.J, data.K)
    return float(np.sum(R * R))


def sigma2_conditional(state: ChainState, data: ModelData, priors: PriorConfig,
                       cache: Cache | None = None, rule: str = "joint"):
    """Scaled-inverse-chi-squared ``(dof, scale)`` for the error variance.

    ``rule="joint"`` is the exact conditional of the full joint, where the
    coefficient priors also scale with ``s2``; ``rule="likelihood"`` keeps
    only the data term (dof ``IJK``, scale ``RSS / IJK``).
    """
    rss = residual_sum_squares(state, data, cache)
    if rule == "likelihood":
        return data.n_obs, rss / data.n_obs
    if rule != "joint":
        raise ValidationError(f"unknown sigma2 rule {rule!r}")
    pen = float(np.sum(np.sum(state.b**2, axis=1) / state.tau2)) if data.p else 0.0
    pen += float(np.sum(state.c**2)) / priors.Sigma_cr_scale
    dof = data.n_obs + data.v * (data.p + data.q)
    return dof, (rss + pen) / dof


# joint density ----------------------------------------------------------------


def log_joint(state: ChainState, data: ModelData, priors: PriorConfig) -> float:
    """Unnormalized log posterior, evaluated directly from the model (no caches)."""
    s2, v = state.sigma2_eps, data.v
    fitted = (data.X @ state.b + data.W @ state.c) @ data.Phi.T
    fitted = fitted[:, None, :] + (state.zeta @ data.Psi.T).reshape(data.I, data.J, data.K)
    R = data.panel.Y - fitted
    lp = -0.5 * data.n_obs * np.log(s2) - 0.5 * np.sum(R * R) / s2
    lp -= np.log(s2)
    for m in range(data.p):
        t2 = state.tau2[m]
        bb = float(state.b[m] @ state.b[m])
        lp += -0.5 * v * np.log(s2 * t2) - 0.5 * bb / (s2 * t2)
        a = 0.5 * (v + 1)
        rate = 0.5 * v * state.lambdaR2
        lp += a * np.log(rate) + (a - 1) * np.log(t2) - rate * t2
    lp += (priors.alpha1R - 1) * np.log(state.lambdaR2) - priors.alpha2R * state.lambdaR2
    sc = priors.Sigma_cr_scale
    for r in range(data.q):
        lp += -0.5 * v * np.log(s2 * sc) - 0.5 * float(state.c[r] @ state.c[r]) / (s2 * sc)
    for l in range(data.L):
        lam = state.lambdas[l]
        z = state.zeta[:, l]
        lp += -0.5 * z.size * np.log(lam) - 0.5 * float(z @ z) / lam
        lp += -(priors.alpha1l + 1) * np.log(lam) - priors.alpha2l / lam
    return float(lp)


# univariate samplers ------------------------------------------------------------


def draw_inverse_gaussian(mean, shape, rng, size=None):
    return rng.wald(mean, shape, size)


def draw_gamma(shape, rate, rng, size=None):
    return rng.gamma(shape, 1.0 / rate, size)


def draw_inverse_gamma(shape, scale, rng, size=None):
    return scale / rng.gamma(shape, 1.0, size)


def draw_scaled_inv_chi2(dof, scale, rng, size=None):
    return dof * scale / rng.chisquare(dof, size)


# single-block updates ---------------------------------------------------------


def _mvn_draw(mean, cov, z):
    return mean + np.linalg.cholesky(cov) @ z


def update_b(m, state, data, cache, rng):
    mean, cov = b_conditional(m, state, data, cache)
    new = _mvn_draw(mean, cov, rng.standard_normal(data.v))
    _shift_b(m, new, state, data, cache)
    return new


def _shift_b(m, new, state, data, cache):
    delta = new - state.b[m]
    xm = data.X[:, m]
    cache.theta += np.outer(xm, delta)
    cache.E -= data.J * np.outer(xm, data.G @ delta)
    state.b[m] = new


def update_c(r, state, data, cache, rng, priors=PriorConfig()):
    mean, cov = c_conditional(r, state, data, cache, priors)
    new = _mvn_draw(mean, cov, rng.standard_normal(data.v))
    delta = new - state.c[r]
    wr = data.W[:, r]
    cache.theta += np.outer(wr, delta)
    cache.E -= data.J * np.outer(wr, data.G @ delta)
    state.c[r] = new
    return new


def update_tau2(state, data, rng, order=None):
    if data.p == 0:
        return state.tau2
    mean, shape = tau2_conditional(state, data)
    if order is None:
        state.tau2 = 1.0 / np.maximum(draw_inverse_gaussian(mean, shape, rng), 1e-300)
    else:
        tau2 = np.empty(data.p)
        tau2[order] = 1.0 / np.maximum(draw_inverse_gaussian(mean[order], shape[order], rng), 1e-300)
        state.tau2 = tau2
    return state.tau2


def update_lambdaR2(state, data, rng, priors=PriorConfig()):
    shape, rate = lambdaR2_conditional(state, data, priors)
    state.lambdaR2 = float(draw_gamma(shape, rate, rng))
    return state.lambdaR2


def update_zeta(state, data, cache, rng):
    if data.L == 0:
        return state.zeta
    mean, cov = zeta_conditional(state, data, cache)
    chol = np.linalg.cholesky(cov)
    zeta = mean + rng.standard_normal(mean.shape) @ chol.T
    dz = (zeta - state.zeta).reshape(data.I, data.J, data.L).sum(axis=1)
    cache.E -= dz @ data.PsiTPhi
    state.zeta = zeta
    return zeta


def update_lambdas(state, data, rng, priors=PriorConfig()):
    if data.L == 0:
        return state.lambdas
    shape, scale = lambdas_conditional(state, data, priors)
    state.lambdas = draw_inverse_gamma(shape, scale, rng)
    return state.lambdas


def update_sigma2(state, data, rng, priors=PriorConfig(), cache=None, rule="joint"):
    dof, scale = sigma2_conditional(state, data, priors, cache, rule)
    state.sigma2_eps = max(float(draw_scaled_inv_chi2(dof, scale, rng)), SIGMA2_FLOOR)
    return state.sigma2_eps


# fast sweep over all penalized groups -------------------------------------------


@numba.njit(cache=True)
def _b_sweep_kernel(X, E, theta, G, B, tau2, sigma2, J, sxx, Z, order):  # pragma: no cover - jitted
    I, p = X.shape
    v = G.shape[0]
    s = np.empty(v)
    A = np.empty((v, v))
    Lc = np.empty((v, v))
    y = np.empty(v)
    mean = np.empty(v)
    noise = np.empty(v)
    delta = np.empty(v)
    gd = np.empty(v)
    for pos in range(p):
        m = order[pos]
        t2 = tau2[m]
        for a in range(v):
            acc = 0.0
            for i in range(I):
                acc += X[i, m] * E[i, a]
            gb = 0.0
            for c in range(v):
                gb += G[a, c] * B[m, c]
            s[a] = acc + sxx[m] * gb
        for a in range(v):
            for c in range(v):
                A[a, c] = t2 * sxx[m] * G[a, c]
            A[a, a] += 1.0
        # Cholesky A = Lc Lc^T
        for a in range(v):
            for c in range(a + 1):
                acc = A[a, c]
                for k in range(c):
                    acc -= Lc[a, k] * Lc[c, k]
                if a == c:
                    if acc <= 0.0:
                        return m
                    Lc[a, a] = np.sqrt(acc)
                else:
                    Lc[a, c] = acc / Lc[c, c]
            for c in range(a + 1, v):
                Lc[a, c] = 0.0
        # mean = A^-1 (t2 s); noise = sqrt(s2 t2) Lc^-T z
        for a in range(v):
            acc = t2 * s[a]
            for k in range(a):
                acc -= Lc[a, k] * y[k]
            y[a] = acc / Lc[a, a]
        for a in range(v - 1, -1, -1):
            acc = y[a]
            acc2 = Z[pos, a]
            for k in range(a + 1, v):
                acc -= Lc[k, a] * mean[k]
                acc2 -= Lc[k, a] * noise[k]
            mean[a] = acc / Lc[a, a]
            noise[a] = acc2 / Lc[a, a]
        scale = np.sqrt(sigma2 * t2)
        for a in range(v):
            newb = mean[a] + scale * noise[a]
            delta[a] = newb - B[m, a]
            B[m, a] = newb
        for a in range(v):
            acc = 0.0
            for c in range(v):
                acc += G[a, c] * delta[c]
            gd[a] = J * acc
        for i in range(I):
            x = X[i, m]
            if x != 0.0:
                for a in range(v):
                    theta[i, a] += x * delta[a]
                    E[i, a] -= x * gd[a]
    return -1


def sweep_b(state: ChainState, data: ModelData, cache: Cache, Z: np.ndarray, order=None) -> None:
    """Update the groups ``b_m`` one at a time using pre-drawn standard normals.

    Groups are visited in ``order`` (default ``0..p-1``); row ``k`` of ``Z``
    (p, v) drives the ``k``-th group visited.
    """
    if data.p == 0:
        return
    order = np.arange(data.p) if order is None else np.asarray(order, dtype=np.int64)
    bad = _b_sweep_kernel(data.X, cache.E, cache.theta, data.G, state.b, state.tau2,
                          float(state.sigma2_eps), float(data.J), data.sxx, Z, order)
    if bad >= 0:
        raise NumericalFailure(f"precision matrix for group {bad} is not positive definite")


def sweep_b_reference(state, data, cache, Z, order=None):
    """Pure numpy equivalent of :func:`sweep_b` (same draws)."""
    order = range(data.p) if order is None else order
    for pos, m in enumerate(order):
        mean, cov = b_conditional(m, state, data, cache)
        tau2 = state.tau2[m]
        A = np.eye(data.v) + tau2 * data.sxx[m] * data.G
        Lc = np.linalg.cholesky(A)
        new = mean + np.sqrt(state.sigma2_eps * tau2) * linalg.solve_triangular(Lc.T, Z[pos], lower=False)
        _shift_b(m, new, state, data, cache)


# chain driver -------------------------------------------------------------------


@dataclass
class PosteriorSummary:
    b_mean: np.ndarray
    c_mean: np.ndarray
    group_norms: np.ndarray
    coef_curves: np.ndarray  # (p, K)
    bands_lo: np.ndarray
    bands_hi: np.ndarray
    cov_curves: np.ndarray  # (q, K)
    cov_bands_lo: np.ndarray
    cov_bands_hi: np.ndarray
    mu_hat: np.ndarray
    fitted: np.ndarray  # (I, J, K)
    zeta_mean: np.ndarray
    tau2_mean: np.ndarray
    lambdaR2_mean: float
    lambdas_mean: np.ndarray
    sigma2_mean: float
    t: np.ndarray
    predictor_names: tuple = ()
    covariate_names: tuple = ()
    band_level: float = 0.95


@dataclass
class ChainResult:
    summary: PosteriorSummary
    draws: dict
    diagnostics: dict = field(default_factory=dict)
    final_state: ChainState | None = None


def initial_state(data: ModelData, fpca: FpcaResult, pilot: PilotFit) -> ChainState:
    lambdas = np.asarray(fpca.lambdas, dtype=float)[: data.L].copy()
    return ChainState(
        b=np.array(pilot.coef_x, dtype=float, copy=True).reshape(data.p, data.v),
        c=np.array(pilot.coef_w, dtype=float, copy=True).reshape(data.q, data.v),
        tau2=np.ones(data.p),
        lambdaR2=1.0,
        zeta=np.zeros((data.I * data.J, data.L)),
        lambdas=np.maximum(lambdas, 1e-8),
        sigma2_eps=max(float(fpca.sigma2_nugget), 1e-6),
    )


def _check_finite(state: ChainState, it: int) -> None:
    for name in ("sigma2_eps", "lambdaR2"):
        if not np.isfinite(getattr(state, name)):
            raise ChainDiverged(it, name)
    for name in ("b", "c", "tau2", "lambdas"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise ChainDiverged(it, name)


def _band_quantiles(draws: np.ndarray, Phi: np.ndarray, level: float, chunk: int = 64):
    """Pointwise quantiles of ``Phi @ coef`` over draws (n, groups, v)."""
    n, g, _ = draws.shape
    K = Phi.shape[0]
    lo = np.empty((g, K))
    hi = np.empty((g, K))
    a = (1 - level) / 2
    for start in range(0, g, chunk):
        curves = draws[:, start:start + chunk, :] @ Phi.T  # (n, chunk, K)
        q = np.quantile(curves, [a, 1 - a], axis=0)
        lo[start:start + chunk], hi[start:start + chunk] = q[0], q[1]
    return lo, hi


def run_chain(panel: CurvePanel, basis: BasisSystem, fpca: FpcaResult, priors: PriorConfig = PriorConfig(),
              n_burn: int = 1000, n_keep: int = 1000, seed: int = 0, *, pilot: PilotFit | None = None,
              init: ChainState | None = None, sigma2_rule: str = "joint", check_every: int = 100,
              band_level: float = 0.95, keep_zeta_draws: bool = False, order=None) -> ChainResult:
    """Run the Gibbs sampler and summarize the kept draws.

    Sweep order: b_1..b_p, c_1..c_q, tau2, lambdaR2, zeta, lambda_1..L, sigma2.
    ``order`` permutes the visiting order of the predictor groups (in the b
    sweep and in the tau2 draws), so a chain on permuted columns can replay
    the original chain exactly.
    """
    if n_keep < 1 or n_burn < 0:
        raise ValidationError("need n_keep >= 1 and n_burn >= 0")
    data = ModelData(panel, basis, fpca.Psi)
    if order is not None:
        order = np.asarray(order, dtype=np.int64)
        if not np.array_equal(np.sort(order), np.arange(data.p)):
            raise ValidationError("order must be a permutation of the predictor indices")
    if init is None:
        if pilot is None:
            pilot = ridge_fit(panel, basis)
        state = initial_state(data, fpca, pilot)
    else:
        state = init.copy()
    cache = Cache.fresh(state, data)
    rng = np.random.default_rng(seed)

    p, q, v, L = data.p, data.q, data.v, data.L
    draws = {
        "b": np.empty((n_keep, p, v)),
        "c": np.empty((n_keep, q, v)),
        "tau2": np.empty((n_keep, p)),
        "lambdaR2": np.empty(n_keep),
        "lambdas": np.empty((n_keep, L)),
        "sigma2_eps": np.empty(n_keep),
    }
    zeta_sum = np.zeros_like(state.zeta)
    zeta_draws = np.empty((n_keep,) + state.zeta.shape) if keep_zeta_draws else None
    max_drift = 0.0

    total = n_burn + n_keep
    for it in range(total):
        sweep_b(state, data, cache, rng.standard_normal((p, v)), order)
        for r in range(q):
            update_c(r, state, data, cache, rng, priors)
        update_tau2(state, data, rng, order)
        update_lambdaR2(state, data, rng, priors)
        update_zeta(state, data, cache, rng)
        update_lambdas(state, data, rng, priors)
        update_sigma2(state, data, rng, priors, cache, sigma2_rule)
        _check_finite(state, it)

        if check_every and (it + 1) % check_every == 0:
            fresh = Cache.fresh(state, data)
            scale = max(1.0, float(np.abs(fresh.E).max()), float(np.abs(fresh.theta).max()))
            drift = max(float(np.abs(fresh.E - cache.E).max()),
                        float(np.abs(fresh.theta - cache.theta).max())) / scale
            max_drift = max(max_drift, drift)
            cache = fresh

        k = it - n_burn
        if k >= 0:
            draws["b"][k] = state.b
            draws["c"][k] = state.c
            draws["tau2"][k] = state.tau2
            draws["lambdaR2"][k] = state.lambdaR2
            draws["lambdas"][k] = state.lambdas
            draws["sigma2_eps"][k] = state.sigma2_eps
            zeta_sum += state.zeta
            if zeta_draws is not None:
                zeta_draws[k] = state.zeta
    if zeta_draws is not None:
        draws["zeta"] = zeta_draws

    summary = summarize_draws(draws, zeta_sum / n_keep, data, band_level)
    diagnostics = {"max_cache_drift": max_drift, "n_burn": n_burn, "n_keep": n_keep, "seed": seed,
                   "sigma2_rule": sigma2_rule}
    log.debug("chain finished: sigma2=%.4g lambdaR2=%.4g drift=%.2e", summary.sigma2_mean,
              summary.lambdaR2_mean, max_drift)
    return ChainResult(summary, draws, diagnostics, state)


def summarize_draws(draws: dict, zeta_mean: np.ndarray, data: ModelData, band_level: float = 0.95):
    Phi = data.Phi
    b_mean = draws["b"].mean(axis=0)
    c_mean = draws["c"].mean(axis=0)
    lo, hi = _band_quantiles(draws["b"], Phi, band_level)
    clo, chi = _band_quantiles(draws["c"], Phi, band_level)
    theta = data.X @ b_mean + data.W @ c_mean
    fitted = (theta @ Phi.T)[:, None, :] + (zeta_mean @ data.Psi.T).reshape(data.I, data.J, data.K)
    return PosteriorSummary(
        b_mean=b_mean,
        c_mean=c_mean,
        group_norms=np.linalg.norm(b_mean, axis=1),
        coef_curves=b_mean @ Phi.T,
        bands_lo=lo,
        bands_hi=hi,
        cov_curves=c_mean @ Phi.T,
        cov_bands_lo=clo,
        cov_bands_hi=chi,
        mu_hat=c_mean[0] @ Phi.T,
        fitted=fitted,
        zeta_mean=zeta_mean,
        tau2_mean=draws["tau2"].mean(axis=0),
        lambdaR2_mean=float(draws["lambdaR2"].mean()),
        lambdas_mean=draws["lambdas"].mean(axis=0),
        sigma2_mean=float(draws["sigma2_eps"].mean()),
        t=data.panel.grid.t,
        predictor_names=data.panel.predictor_names,
        covariate_names=("intercept",) + tuple(data.panel.covariate_names),
        band_level=band_level,
    )
