"""Machine-readable fit, selection and replicate-study outputs.

Every CSV starts with a ``# schema: <name>/<version>`` comment line.
"""

from __future__ import annotations

import io
import json
import platform
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .curvedata import CurvePanel
from .fpca import FpcaResult
from .selection import RankedMarkers, ReplicateMetrics
from .splinebasis import BasisSystem, build_basis

SCHEMAS = {
    "coef_curves.csv": "hdfmm.coef_curves/1",
    "eigen.csv": "hdfmm.eigen/1",
    "eigenfunctions.csv": "hdfmm.eigenfunctions/1",
    "norms.csv": "hdfmm.norms/1",
    "draws.csv": "hdfmm.draws/1",
    "ranked.csv": "hdfmm.ranked/1",
    "bic_path.csv": "hdfmm.bic_path/1",
    "metrics.csv": "hdfmm.metrics/1",
    "basis.csv": "hdfmm.basis/1",
    "cov_surface.csv": "hdfmm.cov_surface/1",
}


def write_csv(df: pd.DataFrame, path: Path) -> None:
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMAS[path.name]}\n")
    df.to_csv(buf, index=False, lineterminator="\n")
    path.write_text(buf.getvalue(), encoding="utf-8")


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", float_precision="round_trip")


def write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def versions() -> dict:
    import numba
    import scipy

    return {"hdfmm": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "pandas": pd.__version__, "numba": numba.__version__}


def gwas_pairing_from_names(names, mode: str = "auto"):
    """Detect ``<marker>_a`` / ``<marker>_d`` column pairs.

    Returns ``(pairing, marker_names)`` or ``(None, names)`` when the
    predictors are not paired (or ``mode == "off"``).
    """
    names = list(names)
    if mode == "off" or not names:
        return None, names
    index = {n: k for k, n in enumerate(names)}
    markers, pairs = [], []
    for n in names:
        if n.endswith("_a") and n[:-2] + "_d" in index:
            markers.append(n[:-2])
            pairs.append((index[n], index[n[:-2] + "_d"]))
    if len(pairs) * 2 != len(names):
        if mode == "on":
            from .errors import ValidationError
            raise ValidationError("gwas mode needs every predictor in an <marker>_a / <marker>_d pair")
        return None, names
    return np.array(pairs, dtype=int), markers


def write_fit_outputs(out: Path, panel: CurvePanel, fit, pairing, marker_names, manifest: dict,
                      keep_draws: bool = False, dump_basis: bool = False, dump_fpca: bool = False) -> None:
    out.mkdir(parents=True, exist_ok=True)
    s = fit.chain.summary
    t = panel.grid.t
    K = t.size

    names = list(s.predictor_names) + list(s.covariate_names)
    means = np.vstack([s.coef_curves, s.cov_curves])
    lows = np.vstack([s.bands_lo, s.cov_bands_lo])
    highs = np.vstack([s.bands_hi, s.cov_bands_hi])
    kinds = ["x"] * len(s.predictor_names) + ["w"] * len(s.covariate_names)
    coef = pd.DataFrame({
        "predictor": np.repeat(names, K),
        "role": np.repeat(kinds, K),
        "t": np.tile(t, len(names)),
        "mean": means.ravel(),
        "lo": lows.ravel(),
        "hi": highs.ravel(),
    })
    write_csv(coef, out / "coef_curves.csv")

    fp = fit.fpca
    write_csv(pd.DataFrame({
        "component": np.arange(1, fp.L + 1),
        "lambda_fpca": fp.lambdas,
        "lambda_posterior": s.lambdas_mean,
        "explained": fp.explained,
    }), out / "eigen.csv")
    ef = pd.DataFrame({"t": t})
    for l in range(fp.L):
        ef[f"phi_{l + 1}"] = fp.Psi[:, l]
    write_csv(ef, out / "eigenfunctions.csv")

    write_csv(pd.DataFrame({
        "predictor": list(s.predictor_names),
        "norm": s.group_norms,
        "tau2_mean": s.tau2_mean,
    }), out / "norms.csv")

    if keep_draws:
        d = fit.chain.draws
        n = d["sigma2_eps"].shape[0]
        cols = {"iteration": np.arange(n)}
        for m, name in enumerate(s.predictor_names):
            for k in range(d["b"].shape[2]):
                cols[f"b[{name}][{k}]"] = d["b"][:, m, k]
        for r, name in enumerate(s.covariate_names):
            for k in range(d["c"].shape[2]):
                cols[f"c[{name}][{k}]"] = d["c"][:, r, k]
        for m, name in enumerate(s.predictor_names):
            cols[f"tau2[{name}]"] = d["tau2"][:, m]
        cols["lambdaR2"] = d["lambdaR2"]
        for l in range(d["lambdas"].shape[1]):
            cols[f"lambda[{l + 1}]"] = d["lambdas"][:, l]
        cols["sigma2_eps"] = d["sigma2_eps"]
        write_csv(pd.DataFrame(cols), out / "draws.csv")

    if dump_basis:
        bdf = pd.DataFrame({"t": t})
        for k in range(fit.basis.v):
            bdf[f"phi_{k + 1}"] = fit.basis.Phi[:, k]
        write_csv(bdf, out / "basis.csv")
    if dump_fpca:
        write_csv(pd.DataFrame(fit.surface.G_hat, columns=[f"t{k}" for k in range(K)]), out / "cov_surface.csv")

    summary = {
        "predictor_names": list(s.predictor_names),
        "covariate_names": list(s.covariate_names),
        "markers": list(marker_names),
        "gwas_pairing": None if pairing is None else pairing.tolist(),
        "group_norms": s.group_norms.tolist(),
        "b_mean": s.b_mean.tolist(),
        "c_mean": s.c_mean.tolist(),
        "lambdaR2_mean": s.lambdaR2_mean,
        "lambdas_mean": s.lambdas_mean.tolist(),
        "sigma2_mean": s.sigma2_mean,
        "mu_hat": s.mu_hat.tolist(),
        "band_level": s.band_level,
        "basis": {"degree": fit.basis.degree, "interior_knots": fit.basis.interior_knots.tolist(),
                  "v": fit.basis.v},
        "fpca": {"L": fp.L, "lambdas": fp.lambdas.tolist(), "explained": fp.explained.tolist(),
                 "sigma2_nugget": fp.sigma2_nugget, "lambda_smooth": fit.surface.lambda_smooth},
        "diagnostics": {k: v for k, v in fit.chain.diagnostics.items()},
    }
    write_json(summary, out / "summary.json")
    write_json(manifest, out / "manifest.json")


def read_fit_outputs(fit_dir: Path, panel: CurvePanel):
    """Reload what selection needs: summary, basis and eigenbasis."""
    summary = json.loads((fit_dir / "summary.json").read_text())
    b = summary["basis"]
    basis: BasisSystem = build_basis(panel.grid, b["degree"], b["interior_knots"])
    ef = read_csv(fit_dir / "eigenfunctions.csv")
    Psi = ef[[c for c in ef.columns if c.startswith("phi_")]].to_numpy(dtype=float)
    f = summary["fpca"]
    fpca = FpcaResult(Psi, np.asarray(f["lambdas"]), f["L"], np.asarray(f["explained"]), f["sigma2_nugget"])
    return summary, basis, fpca


def write_selection_outputs(out: Path, ranked: RankedMarkers, marker_names, extra: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(pd.DataFrame({
        "rank": np.arange(1, ranked.order.size + 1),
        "marker": [marker_names[m] for m in ranked.order],
        "norm": ranked.norms,
        "selected": ranked.selected.astype(int),
    }), out / "ranked.csv")
    write_csv(pd.DataFrame({"n_markers": np.arange(ranked.bic_path.size), "bic": ranked.bic_path}),
              out / "bic_path.csv")
    sel = {"n_selected": ranked.n_selected,
           "selected": [marker_names[m] for m in ranked.selected_markers],
           "selected_index": [int(m) for m in ranked.selected_markers]}
    sel.update(extra)
    write_json(sel, out / "selected.json")


def metrics_row(setting: dict, n_rep: int, n_failed: int, truth, by_rule: dict[str, ReplicateMetrics]) -> dict:
    row = {"design": setting["design"], "sigma_eps": setting["sigma_eps"], "I": setting["I"],
           "p1": setting["p1"], "n_rep": n_rep, "n_failed": n_failed}
    for rule, met in by_rule.items():
        row[f"strict_{rule}"] = met.strict_power
        row[f"type1_{rule}"] = met.type1_error
        for k, m in enumerate(truth, start=1):
            row[f"p{k}_{rule}"] = met.individual_power[m]
    return row
