import numpy as np
import pytest

from hdfmm.curvedata import Grid, panel_from_arrays
from hdfmm.pilot import RandomEffectWeight, ridge_fit, ridge_solve
from hdfmm.splinebasis import build_basis


def _problem(seed=0, I=15, J=3, K=20, p=2):
    rng = np.random.default_rng(seed)
    panel = panel_from_arrays(rng.normal(size=(I, J, K)), rng.normal(size=(I, p)), rng.normal(size=I))
    return rng, panel, build_basis(Grid.midpoints(K), 3, (0.5,))


def _kron_design(panel, basis):
    # one row per (i, j, k): [x_i, w_i] (x) Phi(t_k)
    D = np.column_stack([panel.X, panel.W])
    rows = [np.kron(D[i], basis.Phi) for i in range(panel.I) for _ in range(panel.J)]
    return np.vstack(rows)


def test_matches_full_least_squares():
    _, panel, basis = _problem()
    fit = ridge_fit(panel, basis, ridge=1e-12)
    Z = _kron_design(panel, basis)
    beta = np.linalg.lstsq(Z, panel.Y.ravel(), rcond=None)[0].reshape(-1, basis.v)
    np.testing.assert_allclose(np.vstack([fit.coef_x, fit.coef_w]), beta, atol=1e-7)
    resid = panel.Y.ravel() - Z @ beta.ravel()
    assert fit.rss == pytest.approx(resid @ resid, rel=1e-9)
    assert fit.df == (panel.p + panel.q) * basis.v


def test_gls_matches_explicit_weighting():
    rng, panel, basis = _problem(1)
    K = panel.K
    Psi = np.linalg.qr(rng.normal(size=(K, 3)))[0] * np.sqrt(K)
    weight = RandomEffectWeight(Psi, np.array([1.0, 0.5, 0.2]), 0.3)
    V = 0.3 * np.eye(K) + (Psi * [1.0, 0.5, 0.2]) @ Psi.T
    Vinv = np.linalg.inv(V / 0.3)
    A = rng.normal(size=(K, 4))
    np.testing.assert_allclose(weight.apply(A), Vinv @ A, atol=1e-10)
    R = rng.normal(size=(6, K))
    assert weight.quad_sum(R) == pytest.approx(np.einsum("ik,kl,il->", R, Vinv, R), rel=1e-10)

    fit = ridge_fit(panel, basis, ridge=1e-12, weight=weight)
    Z = _kron_design(panel, basis)
    Wfull = np.kron(np.eye(panel.I * panel.J), Vinv)
    beta = np.linalg.solve(Z.T @ Wfull @ Z, Z.T @ Wfull @ panel.Y.ravel()).reshape(-1, basis.v)
    np.testing.assert_allclose(np.vstack([fit.coef_x, fit.coef_w]), beta, atol=1e-7)


def test_dual_and_primal_ridge_agree():
    rng = np.random.default_rng(2)
    D = rng.normal(size=(8, 30))
    Y = rng.normal(size=(8, 5))
    wide = ridge_solve(D, Y, 1e-2)
    kappa = 1e-2 * np.sum(D * D) / D.shape[1]
    primal = np.linalg.solve(D.T @ D + kappa * np.eye(30), D.T @ Y)
    np.testing.assert_allclose(wide, primal, atol=1e-10)


def test_column_subset_and_intercept_only():
    _, panel, basis = _problem(3)
    sub = ridge_fit(panel, basis, [1], ridge=1e-10)
    assert sub.coef_x.shape == (1, basis.v)
    none = ridge_fit(panel, basis, [], ridge=1e-10)
    assert none.coef_x.shape == (0, basis.v)
    assert none.rss >= sub.rss >= ridge_fit(panel, basis, ridge=1e-10).rss
