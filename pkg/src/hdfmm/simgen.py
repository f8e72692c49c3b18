"""Synthetic GWAS-style bilevel functional data (Simulation designs I and II).

Markers are coded additively (AA=1, Aa=0, aa=-1) and dominantly (Aa=1).
Five markers are influential: markers 1, 2, 4, 5 act additively and marker 3
has both an additive and a dominant effect.  One standard-normal covariate
enters through ``C_1(t)``.  Subject/visit deviations use four trigonometric
eigenfunctions with eigenvalues (1, 0.9, 0.6, 0.5).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .curvedata import CurvePanel, Grid
from .errors import InvalidSpec
from .splinebasis import BasisSystem, build_basis

N_INFLUENTIAL = 5

DESIGN_I_COEFS = {
    "c1": (1, 0, -4, -1, 4),
    "a1": (4, 1, 3, 4, 2),
    "a2": (3, 3, 0, -4, 3),
    "a3": (2, 5, 0, 0, 0),
    "d3": (1, 1, 5, 1, 1),
    "a4": (4, 3, 0, 1, 3),
    "a5": (1, 1, 1, 1, -5),
}

DESIGN_II_CURVES = {
    "c1": ("t/10", lambda t: t / 10),
    "a1": ("10*sqrt(t)", lambda t: 10 * np.sqrt(t)),
    "a2": ("exp(2t)", lambda t: np.exp(2 * t)),
    "a3": ("5t^2", lambda t: 5 * t**2),
    "d3": ("t^3/3", lambda t: t**3 / 3),
    "a4": ("1-2^t", lambda t: 1 - 2.0**t),
    "a5": ("10t", lambda t: 10 * t),
}

EIGEN_LAMBDAS = (1.0, 0.9, 0.6, 0.5)


def true_eigenfunctions(t) -> np.ndarray:
    """The four orthonormal eigenfunctions, shape (len(t), 4)."""
    t = np.asarray(t, dtype=float)
    s2 = np.sqrt(2.0)
    return np.column_stack([
        s2 * np.sin(4 * np.pi * t),
        s2 * np.cos(4 * np.pi * t),
        s2 * np.sin(8 * np.pi * t),
        s2 * np.cos(8 * np.pi * t),
    ])


@dataclass(frozen=True)
class SimSpec:
    design: str = "I"
    I: int = 100
    J: int = 5
    K: int = 50
    p1: int = 3000
    sigma_eps: float = 1.0
    seed: int = 0
    eigen_lambdas: tuple[float, ...] = EIGEN_LAMBDAS
    null: bool = False  # no influential markers (null-model control)
    covariate_effect: bool = True

    def __post_init__(self):
        if self.design not in ("I", "II"):
            raise InvalidSpec(f"design must be 'I' or 'II', got {self.design!r}")
        if self.p1 < N_INFLUENTIAL:
            raise InvalidSpec(f"p1 must be at least {N_INFLUENTIAL}")
        if self.K < 2 or self.I < 1 or self.J < 1:
            raise InvalidSpec("need K >= 2 and positive I, J")
        if self.sigma_eps < 0:
            raise InvalidSpec("sigma_eps must be non-negative")
        if len(self.eigen_lambdas) != 4 or min(self.eigen_lambdas) < 0:
            raise InvalidSpec("eigen_lambdas must be four non-negative values")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eigen_lambdas"] = list(self.eigen_lambdas)
        return d


@dataclass
class SimTruth:
    spec: SimSpec
    influential: list[int]  # marker indices (0-based)
    coefficients: dict  # name -> expansion row (design I) or formula (design II)
    curves: dict = field(repr=False)  # name -> true curve on the grid
    maf: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "influential_markers": self.influential,
            "influential_names": [f"m{m + 1}" for m in self.influential],
            "coefficients": self.coefficients,
            "eigen_lambdas": list(self.spec.eigen_lambdas),
            "eigenfunctions": ["sqrt2*sin(4*pi*t)", "sqrt2*cos(4*pi*t)",
                               "sqrt2*sin(8*pi*t)", "sqrt2*cos(8*pi*t)"],
            "predictor_layout": "additive columns m1_a..mP_a then dominant columns m1_d..mP_d",
        }


def _streams(seed: int):
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(4)]


def gen_genotypes(spec: SimSpec, rng: np.random.Generator | None = None):
    """Additive (I, p1) in {-1,0,1} and dominant (I, p1) in {0,1} codes."""
    rng = _streams(spec.seed)[0] if rng is None else rng
    maf = rng.uniform(0.1, 0.5, size=spec.p1)
    counts = rng.binomial(2, maf, size=(spec.I, spec.p1))
    Xa = (counts - 1).astype(float)
    Xd = (counts == 1).astype(float)
    return Xa, Xd, maf


def gen_random_effects(spec: SimSpec, grid: Grid, rng: np.random.Generator | None = None,
                       return_scores: bool = False):
    """Visit-level deviations ``U[i, j, k] = sum_l zeta_ijl phi_l(t_k)``."""
    rng = _streams(spec.seed)[2] if rng is None else rng
    lam = np.asarray(spec.eigen_lambdas, dtype=float)
    zeta = rng.standard_normal((spec.I, spec.J, lam.size)) * np.sqrt(lam)
    U = zeta @ true_eigenfunctions(grid.t).T
    return (U, zeta) if return_scores else U


def true_curves(spec: SimSpec, grid: Grid, basis: BasisSystem | None = None) -> dict:
    if spec.design == "I":
        if basis is None:
            basis = build_basis(grid, 3, (0.5,))
        if basis.v != 5 or basis.degree != 3 or not np.array_equal(basis.interior_knots, [0.5]):
            raise InvalidSpec("design I needs the cubic basis with the single interior knot 0.5")
        return {name: basis.Phi @ np.asarray(row, dtype=float) for name, row in DESIGN_I_COEFS.items()}
    return {name: fn(grid.t) for name, (_, fn) in DESIGN_II_CURVES.items()}


def fixed_effects(Xa, Xd, xc, curves: dict, null: bool = False) -> np.ndarray:
    """Subject-level fixed curves ``A(t)^T x^a + D(t)^T x^d + C(t) x^c``, shape (I, K)."""
    fixed = np.outer(xc, curves["c1"])
    if not null:
        for m in range(N_INFLUENTIAL):
            fixed += np.outer(Xa[:, m], curves[f"a{m + 1}"])
        fixed += np.outer(Xd[:, 2], curves["d3"])
    return fixed


def gen_panel(spec: SimSpec, basis: BasisSystem | None = None, *, return_components: bool = False):
    """Simulate one panel and its truth record.

    Predictors are laid out as ``[Xa | Xd]`` (2 * p1 columns); the covariate
    is a standard-normal ``wc`` column.
    """
    grid = Grid.midpoints(spec.K) if basis is None else basis.grid
    if grid.K != spec.K:
        raise InvalidSpec("basis grid does not match spec.K")
    g_rng, c_rng, u_rng, e_rng = _streams(spec.seed)
    Xa, Xd, maf = gen_genotypes(spec, g_rng)
    xc = c_rng.standard_normal(spec.I)
    U = gen_random_effects(spec, grid, u_rng)
    eps = spec.sigma_eps * e_rng.standard_normal((spec.I, spec.J, spec.K))
    curves = true_curves(spec, grid, basis)

    fixed = fixed_effects(Xa, Xd, xc if spec.covariate_effect else np.zeros_like(xc), curves, spec.null)
    Y = fixed[:, None, :] + U + eps

    p1 = spec.p1
    names = tuple(f"m{m + 1}_a" for m in range(p1)) + tuple(f"m{m + 1}_d" for m in range(p1))
    panel = CurvePanel(
        Y, np.hstack([Xa, Xd]), np.column_stack([np.ones(spec.I), xc]), grid,
        predictor_names=names, covariate_names=("xc",), covariate_tags=("wc",),
    )
    if spec.design == "I":
        coefs = {k: list(v) for k, v in DESIGN_I_COEFS.items()}
    else:
        coefs = {k: expr for k, (expr, _) in DESIGN_II_CURVES.items()}
    truth = SimTruth(spec, [] if spec.null else list(range(N_INFLUENTIAL)), coefs, curves, maf)
    if return_components:
        return panel, truth, {"fixed": fixed, "U": U, "eps": eps}
    return panel, truth


def gwas_pairing(p1: int) -> np.ndarray:
    """Marker -> (additive column, dominant column) for the ``[Xa | Xd]`` layout."""
    return np.column_stack([np.arange(p1), p1 + np.arange(p1)])
