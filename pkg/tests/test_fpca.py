import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdfmm.curvedata import Grid, panel_from_arrays
from hdfmm.errors import DegenerateCovariance, RankDeficientBasis, ValidationError
from hdfmm.fpca import (
    CovarianceSurface, eigendecompose_truncate, empirical_residual_cov, penalized_smoother_family,
    sandwich_smooth, truncation_level,
)
from hdfmm.simgen import EIGEN_LAMBDAS, SimSpec, gen_panel, true_eigenfunctions

K = 50
T = Grid.midpoints(K).t
PHI_TRUE = true_eigenfunctions(T)
G_TRUE = (PHI_TRUE * np.asarray(EIGEN_LAMBDAS)) @ PHI_TRUE.T


def _surface(G, nugget=0.0):
    return CovarianceSurface(G, 1.0, nugget)


def test_zero_and_rank_one_residuals():
    rng = np.random.default_rng(0)
    Y = rng.normal(size=(3, 2, 6))
    panel = panel_from_arrays(Y)
    np.testing.assert_array_equal(empirical_residual_cov(panel, Y), 0.0)
    curve = rng.normal(size=6)
    panel = panel_from_arrays(np.broadcast_to(curve, (3, 2, 6)))
    np.testing.assert_allclose(empirical_residual_cov(panel, np.zeros((3, 6))), np.outer(curve, curve))


def test_residual_cov_matches_brute_force():
    panel, _, parts = gen_panel(SimSpec(I=40, J=4, K=K, p1=5, seed=1), return_components=True)
    fixed = parts["fixed"]
    got = empirical_residual_cov(panel, fixed)
    R = (parts["U"] + parts["eps"]).reshape(-1, K)
    brute = np.zeros((K, K))
    for r in R:
        brute += np.outer(r, r)
    np.testing.assert_allclose(got, brute / R.shape[0], atol=1e-12)
    with pytest.raises(ValidationError):
        empirical_residual_cov(panel, np.zeros((3, 3)))


def test_smooth_low_rank_surface_is_preserved():
    surface = sandwich_smooth(G_TRUE)
    err = np.linalg.norm(surface.G_hat - G_TRUE) / np.linalg.norm(G_TRUE)
    assert err <= 0.05
    assert surface.sigma2_nugget < 0.05


def test_pure_nugget():
    c = 0.7
    surface = sandwich_smooth(c * np.eye(K))
    assert surface.sigma2_nugget == pytest.approx(c, rel=0.05)
    assert np.abs(surface.G_hat).max() < 0.05 * c


def test_nugget_on_signal_plus_noise():
    surface = sandwich_smooth(G_TRUE + 0.25 * np.eye(K))
    assert surface.sigma2_nugget == pytest.approx(0.25, abs=0.03)
    assert np.linalg.norm(surface.G_hat - G_TRUE) / np.linalg.norm(G_TRUE) <= 0.05


def test_smoother_reproduces_constants():
    eigvals, U = penalized_smoother_family(K, 20)
    for lam in (1e-4, 1.0, 1e4):
        S = (U * (1.0 / (1.0 + lam * eigvals))) @ U.T
        np.testing.assert_allclose(S @ np.ones(K), 1.0, atol=1e-8)


def test_smoother_dimension_check():
    with pytest.raises(RankDeficientBasis):
        sandwich_smooth(np.eye(10), basis_dim=11)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(6, 30))
def test_output_symmetric_psd(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    surface = sandwich_smooth(A + A.T, basis_dim=max(4, n // 2))
    G = surface.G_hat
    np.testing.assert_allclose(G, G.T, atol=1e-10)
    w = np.linalg.eigvalsh(G)
    assert w.min() >= -1e-10 * max(w.max(), 1e-300)
    assert surface.sigma2_nugget >= 0.0


def test_true_surface_gives_four_components():
    fp = eigendecompose_truncate(_surface(G_TRUE), 0.90, 0.01)
    assert fp.L == 4
    np.testing.assert_allclose(fp.lambdas, EIGEN_LAMBDAS, rtol=1e-2)
    np.testing.assert_allclose(fp.explained, np.asarray(EIGEN_LAMBDAS) / 3.0, rtol=1e-2)
    cos = np.abs(np.sum(fp.Psi * PHI_TRUE, axis=0)) / K
    P_hat = fp.Psi @ fp.Psi.T / K
    P_true = PHI_TRUE @ PHI_TRUE.T / K
    assert np.linalg.norm(P_hat - P_true) < 1e-2
    assert cos.min() > 0.99


def test_rank_one_surface():
    f = np.sqrt(2) * np.sin(2 * np.pi * T)
    fp = eigendecompose_truncate(_surface(np.outer(f, f)), 0.9, 0.01)
    assert fp.L == 1
    assert fp.explained[0] == pytest.approx(1.0)
    assert fp.lambdas[0] == pytest.approx(np.mean(f * f), rel=1e-10)


def test_configured_L_on_rich_surface():
    rng = np.random.default_rng(3)
    Q = np.linalg.qr(rng.normal(size=(K, 20)))[0]
    G = (Q * np.linspace(2.0, 0.5, 20)) @ Q.T
    assert eigendecompose_truncate(_surface(G), L=15).L == 15


def test_orthonormality_and_reconstruction():
    rng = np.random.default_rng(4)
    Q = np.linalg.qr(rng.normal(size=(K, 8)))[0]
    G = (Q * np.array([5, 3, 2, 1, 0.5, 0.05, 0.01, 0.005])) @ Q.T
    fp = eigendecompose_truncate(_surface(G), tau_total=0.98, tau_incr=0.001)
    np.testing.assert_allclose(fp.Psi.T @ fp.Psi / K, np.eye(fp.L), atol=1e-8)
    assert np.all(np.diff(fp.lambdas) <= 0) and np.all(fp.lambdas > 0)
    assert fp.explained.sum() >= 0.98
    # Psi diag(lambda) Psi^T is on the same scale as G
    assert np.linalg.norm(G - fp.reconstruct()) / np.linalg.norm(G) <= 0.02


def test_degenerate_and_bad_thresholds():
    with pytest.raises(DegenerateCovariance):
        eigendecompose_truncate(_surface(np.zeros((5, 5))))
    with pytest.raises(ValidationError):
        eigendecompose_truncate(_surface(G_TRUE), tau_total=0.5, tau_incr=0.6)


def test_sign_convention():
    fp = eigendecompose_truncate(_surface(G_TRUE))
    peaks = fp.Psi[np.argmax(np.abs(fp.Psi), axis=0), np.arange(fp.L)]
    assert np.all(peaks > 0)


def test_truncation_rule_cases():
    # cumulative share passes 0.9 at L=2, but component 3 still explains >= 1%
    assert truncation_level(np.array([0.6, 0.35, 0.04, 0.01 - 1e-9]), 0.9, 0.01) == 3
    assert truncation_level(np.array([0.95, 0.045, 0.005]), 0.9, 0.01) == 2
    assert truncation_level(np.array([1.0]), 0.9, 0.01) == 1


@settings(max_examples=100, deadline=None)
@given(raw=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12).filter(lambda x: sum(x) > 0),
       t1=st.floats(0.05, 0.99), t2=st.floats(0.05, 0.99), incr=st.floats(0.001, 0.04))
def test_truncation_monotone_in_total(raw, t1, t2, incr):
    props = np.sort(np.asarray(raw))[::-1]
    props = props / props.sum()
    lo, hi = sorted((t1, t2))
    assert truncation_level(props, lo, incr) <= truncation_level(props, hi, incr)
