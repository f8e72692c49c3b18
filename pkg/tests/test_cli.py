import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from hdfmm import cli
from hdfmm.config import RunConfig, load_config
from hdfmm.curvedata import load_panel, panel_from_arrays, save_panel
from hdfmm.errors import ChainDiverged, ValidationError
from hdfmm.outputs import read_csv

SMALL = ["--set", "p1=5", "--set", "n_subjects=30", "--set", "J=2", "--set", "K=15",
         "--set", "n_burn=30", "--set", "n_keep=30"]


def _run(*args):
    return cli.main([str(a) for a in args])


def test_config_file_and_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[hdfmm]\nn_burn = 20\nsigmas = 0, 1\nfixed_L = none\nkeep_draws = yes\n")
    cfg = load_config(ini, {"n_keep": "7", "designs": "I,II"})
    assert (cfg.n_burn, cfg.n_keep, cfg.sigmas, cfg.designs) == (20, 7, (0.0, 1.0), ("I", "II"))
    assert cfg.fixed_L is None and cfg.keep_draws
    assert cfg.hash() == load_config(ini, {"n_keep": "7", "designs": "I,II", "out": "x"}).hash()
    with pytest.raises(ValidationError):
        load_config(None, {"no_such_key": "1"})
    with pytest.raises(ValidationError):
        load_config(None, {"n_burn": "many"})
    with pytest.raises(ValidationError):
        RunConfig(tau_total=0.5, tau_incr=0.6)
    with pytest.raises(ValidationError):
        load_config(tmp_path / "absent.ini")


def test_simulate_fit_select(tmp_path):
    sim, fit, sel = tmp_path / "sim", tmp_path / "fit", tmp_path / "sel"
    assert _run("simulate", "--out", sim, "--seed", 3, *SMALL) == 0
    rep = sim / "rep_0"
    for name in ("curves.csv", "design.csv", "truth.json", "manifest.json"):
        assert (rep / name).is_file()
    assert json.loads((rep / "truth.json").read_text())["influential_markers"] == [0, 1, 2, 3, 4]

    assert _run("fit", "--panel", rep, "--out", fit, "--keep-draws", "--dump-basis", "--dump-fpca",
                *SMALL) == 0
    for name in ("coef_curves.csv", "eigen.csv", "eigenfunctions.csv", "norms.csv", "draws.csv",
                 "basis.csv", "cov_surface.csv", "summary.json", "manifest.json"):
        assert (fit / name).is_file(), name
    assert (fit / "coef_curves.csv").read_text().startswith("# schema: hdfmm.coef_curves/1\n")
    summary = json.loads((fit / "summary.json").read_text())
    assert summary["basis"]["v"] == 5 and summary["markers"] == [f"m{k}" for k in range(1, 6)]
    man = json.loads((fit / "manifest.json").read_text())
    assert man["command"] == "fit" and man["seed"] == 0 and len(man["config_hash"]) == 64
    curves = read_csv(fit / "coef_curves.csv")
    assert np.all(curves.lo <= curves["mean"] + 1e-12) and np.all(curves["mean"] <= curves.hi + 1e-12)

    assert _run("select", "--panel", rep, "--fit", fit, "--out", sel, *SMALL) == 0
    ranked = read_csv(sel / "ranked.csv")
    assert list(ranked.columns) == ["rank", "marker", "norm", "selected"]
    assert np.all(np.diff(ranked.norm) <= 0)
    chosen = json.loads((sel / "selected.json").read_text())
    assert chosen["n_selected"] == len(chosen["selected"]) == int(ranked.selected.sum())
    assert len(chosen["top"]) == 5 and chosen["manifest"]["command"] == "select"
    assert read_csv(sel / "bic_path.csv").shape[0] == 6


def test_same_seed_same_files(tmp_path):
    for name in ("a", "b"):
        assert _run("simulate", "--out", tmp_path / name, "--seed", 11, *SMALL) == 0
        assert _run("fit", "--panel", tmp_path / name / "rep_0", "--out", tmp_path / f"fit_{name}",
                    "--seed", 5, *SMALL) == 0
    for f in ("rep_0/curves.csv", "rep_0/design.csv", "rep_0/truth.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    for f in ("coef_curves.csv", "norms.csv", "eigen.csv"):
        assert (tmp_path / "fit_a" / f).read_bytes() == (tmp_path / "fit_b" / f).read_bytes()


def test_grid_writes_eight_settings(tmp_path):
    assert _run("simulate", "--grid", "full", "--out", tmp_path, *SMALL) == 0
    dirs = sorted(p.name for p in tmp_path.iterdir())
    assert len(dirs) == 8
    assert "simII_sigma0_I300" in dirs and "simI_sigma1_I100" in dirs
    panel = load_panel(tmp_path / "simII_sigma0_I300" / "rep_0" / "curves.csv",
                       tmp_path / "simII_sigma0_I300" / "rep_0" / "design.csv")
    assert panel.I == 300


def test_intercept_only_fit(tmp_path):
    rng = np.random.default_rng(0)
    save_panel(panel_from_arrays(rng.normal(size=(20, 2, 12))), tmp_path / "p")
    assert _run("fit", "--panel", tmp_path / "p", "--out", tmp_path / "f", *SMALL) == 0
    summary = json.loads((tmp_path / "f" / "summary.json").read_text())
    assert summary["group_norms"] == [] and summary["gwas_pairing"] is None
    assert set(read_csv(tmp_path / "f" / "coef_curves.csv").role) == {"w"}


def test_gwas_on_requires_pairs(tmp_path):
    rng = np.random.default_rng(1)
    save_panel(panel_from_arrays(rng.normal(size=(20, 2, 12)), rng.normal(size=(20, 3))), tmp_path / "p")
    assert _run("fit", "--panel", tmp_path / "p", "--out", tmp_path / "f", "--gwas", "on", *SMALL) == 2


def test_validation_exit_codes(tmp_path, capsys):
    assert _run("fit", "--panel", tmp_path / "missing", "--out", tmp_path / "f") == 2
    assert _run("simulate", "--out", tmp_path, "--set", "tau_total=0.001") == 2
    assert _run("select", "--panel", tmp_path, "--out", tmp_path / "s") == 2
    assert _run("summarize", "--out", tmp_path / "nothing") == 2
    assert "hdfmm:" in capsys.readouterr().err


def test_numerical_exit_code(tmp_path):
    save_panel(panel_from_arrays(np.zeros((10, 2, 12))), tmp_path / "p")
    assert _run("fit", "--panel", tmp_path / "p", "--out", tmp_path / "f", *SMALL) == 3


def test_replicate_partial_failure(tmp_path, monkeypatch):
    real = cli.fit_panel
    calls = []

    def flaky(panel, settings, seed):
        calls.append(seed)
        if len(calls) == 2:
            raise ChainDiverged(7, "sigma2_eps")
        return real(panel, settings, seed)

    monkeypatch.setattr(cli, "fit_panel", flaky)
    assert _run("replicate", "--out", tmp_path, "--replicates", 3, *SMALL) == 4
    setting = tmp_path / "simI_sigma1_I30"
    assert (setting / "rep_1" / "failed.json").is_file()
    assert (setting / "rep_0" / "selected.json").is_file()
    m = read_csv(tmp_path / "metrics.csv")
    assert (m.n_rep.item(), m.n_failed.item()) == (2, 1)


def test_replicate_then_summarize_reproduces_metrics(tmp_path):
    args = ["replicate", "--replicates", 2, "--set", "sigmas=0,1", *SMALL]
    assert _run(*args, "--out", tmp_path / "a") == 0
    assert _run(*args, "--out", tmp_path / "b") == 0
    first = (tmp_path / "a" / "metrics.csv").read_bytes()
    assert first == (tmp_path / "b" / "metrics.csv").read_bytes()
    m = read_csv(tmp_path / "a" / "metrics.csv")
    assert list(m.sigma_eps) == [0.0, 1.0]
    for col in ("strict_bic", "type1_bic", "p1_bic", "p5_bic", "strict_top", "p5_top"):
        assert col in m.columns
    (tmp_path / "a" / "metrics.csv").unlink()
    assert _run("summarize", "--out", tmp_path / "a") == 0
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == first


def test_replicate_seeds_independent_of_order():
    cfg = RunConfig(seed=4, p1=5)
    seeds = {cli.replicate_seeds(cfg, d, s, n, r) for d, s, n in cli.FULL_GRID for r in range(3)}
    assert len(seeds) == 24
    assert cli.replicate_seeds(cfg, "I", 1.0, 100, 2) == cli.replicate_seeds(RunConfig(seed=4, p1=5, workers=3),
                                                                           "I", 1.0, 100, 2)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "hdfmm", "simulate", "--out", str(tmp_path), *SMALL],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert pd.read_csv(tmp_path / "rep_0" / "curves.csv", comment="#").shape[0] == 30 * 2 * 15
    help_ = subprocess.run([sys.executable, "-m", "hdfmm", "--help"], capture_output=True, text=True)
    assert "replicate" in help_.stdout
