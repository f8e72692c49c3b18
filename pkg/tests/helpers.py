"""Shared oracles: random small problems and scipy-based conditional densities."""

from __future__ import annotations

import numpy as np
from scipy import stats

from hdfmm.curvedata import Grid, panel_from_arrays
from hdfmm.gibbs import (
    Cache, ChainState, ModelData, PriorConfig, b_conditional, c_conditional, lambdaR2_conditional,
    lambdas_conditional, sigma2_conditional, tau2_conditional, zeta_conditional,
)
from hdfmm.splinebasis import build_basis

UPDATES = ("b", "c", "tau2", "lambdaR2", "zeta", "lambdas", "sigma2")


def random_problem(rng: np.random.Generator, I=4, J=3, K=12, p=3, q=2, L=2):
    """A small model with random data and a random valid state."""
    grid = Grid.midpoints(K)
    basis = build_basis(grid, 3, (0.5,))
    X = rng.normal(size=(I, p))
    Wc = rng.normal(size=(I, q - 1))
    Y = rng.normal(size=(I, J, K))
    panel = panel_from_arrays(Y, X, Wc, grid)
    Psi = np.linalg.qr(rng.normal(size=(K, L)))[0] * np.sqrt(K)
    data = ModelData(panel, basis, Psi)
    priors = PriorConfig(*rng.uniform(0.5, 2.0, size=5))
    return data, priors, random_state(rng, data)


def random_state(rng, data: ModelData) -> ChainState:
    v = data.v
    return ChainState(
        b=rng.normal(scale=0.5, size=(data.p, v)),
        c=rng.normal(scale=0.5, size=(data.q, v)),
        tau2=rng.uniform(0.3, 2.0, size=data.p),
        lambdaR2=float(rng.uniform(0.3, 3.0)),
        zeta=rng.normal(scale=0.5, size=(data.I * data.J, data.L)),
        lambdas=rng.uniform(0.3, 2.0, size=data.L),
        sigma2_eps=float(rng.uniform(0.5, 2.0)),
    )


def perturb(rng, state: ChainState, block: str, index: int = 0) -> ChainState:
    """Copy of ``state`` differing only in ``block``."""
    new = state.copy()
    if block == "b":
        new.b[index] += rng.normal(scale=0.3, size=new.b.shape[1])
    elif block == "c":
        new.c[index] += rng.normal(scale=0.3, size=new.c.shape[1])
    elif block == "tau2":
        new.tau2[index] *= np.exp(rng.normal(scale=0.5))
    elif block == "lambdaR2":
        new.lambdaR2 *= float(np.exp(rng.normal(scale=0.5)))
    elif block == "zeta":
        new.zeta += rng.normal(scale=0.2, size=new.zeta.shape)
    elif block == "lambdas":
        new.lambdas *= np.exp(rng.normal(scale=0.5, size=new.lambdas.size))
    elif block == "sigma2":
        new.sigma2_eps *= float(np.exp(rng.normal(scale=0.3)))
    else:
        raise ValueError(block)
    return new


def log_conditional(block: str, value: ChainState, given: ChainState, data: ModelData,
                    priors: PriorConfig, index: int = 0) -> float:
    """log f(block of ``value`` | rest of ``given``) from scipy densities.

    The conditional parameters come from ``given``; ``value`` only supplies
    the block being evaluated.
    """
    cache = Cache.fresh(given, data)
    if block == "b":
        mean, cov = b_conditional(index, given, data, cache)
        return stats.multivariate_normal(mean, cov).logpdf(value.b[index])
    if block == "c":
        mean, cov = c_conditional(index, given, data, cache, priors)
        return stats.multivariate_normal(mean, cov).logpdf(value.c[index])
    if block == "tau2":
        mu, shape = tau2_conditional(given, data)
        inv = 1.0 / value.tau2[index]
        # density of tau2 = IG-density of 1/tau2 times the Jacobian 1/tau2^2
        return (stats.invgauss(mu[index] / shape[index], scale=shape[index]).logpdf(inv)
                - 2.0 * np.log(value.tau2[index]))
    if block == "lambdaR2":
        shape, rate = lambdaR2_conditional(given, data, priors)
        return stats.gamma(shape, scale=1.0 / rate).logpdf(value.lambdaR2)
    if block == "zeta":
        mean, cov = zeta_conditional(given, data, cache)
        return float(np.sum(stats.multivariate_normal(np.zeros(data.L), cov).logpdf(value.zeta - mean)))
    if block == "lambdas":
        shape, scale = lambdas_conditional(given, data, priors)
        return float(np.sum(stats.invgamma(shape, scale=scale).logpdf(value.lambdas)))
    if block == "sigma2":
        dof, s = sigma2_conditional(given, data, priors, rule="joint")
        return stats.invgamma(dof / 2.0, scale=dof * s / 2.0).logpdf(value.sigma2_eps)
    raise ValueError(block)


def density_ratio_gap(rng, block: str, data=None, priors=None, state=None) -> float:
    """|[log f(b'|.) - log f(b|.)] - [log pi(theta') - log pi(theta)]| for one random pair."""
    from hdfmm.gibbs import log_joint

    if data is None:
        data, priors, state = random_problem(rng)
    index = int(rng.integers(data.p if block in ("b", "tau2") else data.q)) if block in ("b", "c", "tau2") else 0
    new = perturb(rng, state, block, index)
    lhs = (log_conditional(block, new, state, data, priors, index)
           - log_conditional(block, state, state, data, priors, index))
    rhs = log_joint(new, data, priors) - log_joint(state, data, priors)
    return abs(lhs - rhs)


def cox_de_boor(x, knots, degree):
    """All B-splines of ``knots`` at ``x`` by the textbook recursion.

    Half-open spans, with ``x == knots[-1]`` assigned to the last non-empty span.
    """
    x = np.asarray(x, dtype=float).ravel()
    u = np.asarray(knots, dtype=float)
    n_span = u.size - 1
    B = np.zeros((x.size, n_span))
    for s in range(n_span):
        if u[s] < u[s + 1]:
            B[:, s] = (x >= u[s]) & (x < u[s + 1])
    last = np.flatnonzero(u[:-1] < u[1:])[-1]
    B[x == u[-1], last] = 1.0
    for d in range(1, degree + 1):
        nxt = np.zeros((x.size, n_span - d))
        for s in range(n_span - d):
            left, right = u[s + d] - u[s], u[s + d + 1] - u[s + 1]
            if left > 0:
                nxt[:, s] += (x - u[s]) / left * B[:, s]
            if right > 0:
                nxt[:, s] += (u[s + d + 1] - x) / right * B[:, s + 1]
        B = nxt
    return B
