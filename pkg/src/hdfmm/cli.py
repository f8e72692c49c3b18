"""``hdfmm`` command line: simulate, fit, select, replicate, summarize.

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 partial replicate failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from . import outputs
from .config import RunConfig, load_config
from .curvedata import CurvePanel, load_panel, save_panel
from .errors import HdfmmError, NumericalError, ValidationError
from .pipeline import fit_panel, selections_both_rules
from .selection import bic_stepwise, rank_groups, replicate_metrics
from .simgen import SimSpec, gen_panel

log = logging.getLogger("hdfmm")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 2, 3, 4

FULL_GRID = [(d, s, n) for d in ("I", "II") for s in (0.0, 1.0) for n in (100, 300)]


class PartialFailure(Exception):
    pass


# -- seeding and settings ---------------------------------------------------

def replicate_seeds(cfg: RunConfig, design: str, sigma: float, I: int, rep: int) -> tuple[int, int]:
    """(simulation seed, chain seed) for one replicate.

    Keyed on the setting, not on the scheduling order, so any worker count
    gives the same numbers.
    """
    key = [cfg.seed, ("I", "II").index(design), int(round(sigma * 1000)), I, cfg.p1, rep]
    sim_seed, chain_seed = np.random.SeedSequence(key).generate_state(2, dtype=np.uint64)
    return int(sim_seed), int(chain_seed)


def settings_grid(cfg: RunConfig, grid: str | None):
    if grid == "full":
        return list(FULL_GRID)
    return [(d, s, n) for d in cfg.designs for s in cfg.sigmas for n in cfg.n_subjects]


def setting_dir(root: Path, design: str, sigma: float, I: int) -> Path:
    return root / f"sim{design}_sigma{sigma:g}_I{I}"


def sim_spec(cfg: RunConfig, design: str, sigma: float, I: int, seed: int) -> SimSpec:
    return SimSpec(design=design, I=I, J=cfg.J, K=cfg.K, p1=cfg.p1, sigma_eps=sigma, seed=seed,
                   null=cfg.null)


def base_manifest(cfg: RunConfig, command: str, seed: int, started: float) -> dict:
    return {"command": command, "seed": seed, "config": cfg.to_dict(), "config_hash": cfg.hash(),
            "versions": outputs.versions(), "wall_time_s": round(time.perf_counter() - started, 3)}


# -- panel helpers ------------------------------------------------------------

def _panel_paths(cfg: RunConfig) -> tuple[Path, Path]:
    if cfg.curves and cfg.design_file:
        return Path(cfg.curves), Path(cfg.design_file)
    if cfg.panel_dir:
        d = Path(cfg.panel_dir)
        return d / "curves.csv", d / "design.csv"
    raise ValidationError("give --panel DIR or both --curves and --design-csv")


def read_panel(cfg: RunConfig) -> CurvePanel:
    curves, design = _panel_paths(cfg)
    for p in (curves, design):
        if not p.is_file():
            raise ValidationError(f"missing input file {p}")
    panel = load_panel(curves, design)
    return panel.with_standardized_covariates() if cfg.standardize_covariates else panel


def _select(panel: CurvePanel, basis, fpca, group_norms, sigma2, lambdas, pairing, cfg: RunConfig):
    ranked = rank_groups(group_norms, pairing)
    return bic_stepwise(panel, basis, fpca, ranked, max_markers=cfg.max_markers, sigma2=sigma2,
                        lambdas=lambdas, ridge=cfg.pilot_ridge)


# -- commands -------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, grid: str | None = None) -> int:
    started = time.perf_counter()
    root = Path(cfg.out)
    settings = settings_grid(cfg, grid)
    single = len(settings) == 1 and grid is None
    for design, sigma, I in settings:
        base = root if single else setting_dir(root, design, sigma, I)
        for rep in range(cfg.replicates):
            sim_seed, chain_seed = replicate_seeds(cfg, design, sigma, I, rep)
            panel, truth = gen_panel(sim_spec(cfg, design, sigma, I, sim_seed))
            d = base / f"rep_{rep}"
            save_panel(panel, d)
            outputs.write_json(truth.to_json(), d / "truth.json")
            man = base_manifest(cfg, "simulate", cfg.seed, started)
            man.update({"replicate": rep, "simulation_seed": sim_seed, "chain_seed": chain_seed})
            outputs.write_json(man, d / "manifest.json")
    log.info("simulated %d setting(s) x %d replicate(s) under %s", len(settings), cfg.replicates, root)
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    started = time.perf_counter()
    panel = read_panel(cfg)
    pairing, markers = outputs.gwas_pairing_from_names(panel.predictor_names, cfg.gwas)
    fit = fit_panel(panel, cfg.fit_settings(), cfg.seed)
    man = base_manifest(cfg, "fit", cfg.seed, started)
    man["inputs"] = [str(p) for p in _panel_paths(cfg)]
    outputs.write_fit_outputs(Path(cfg.out), panel, fit, pairing, markers, man, cfg.keep_draws,
                              cfg.dump_basis, cfg.dump_fpca)
    log.info("fit done: L=%d sigma2=%.4g", fit.fpca.L, fit.chain.summary.sigma2_mean)
    return EXIT_OK


def cmd_select(cfg: RunConfig) -> int:
    started = time.perf_counter()
    if not cfg.fit_dir:
        raise ValidationError("select needs --fit DIR")
    fit_dir = Path(cfg.fit_dir)
    if not (fit_dir / "summary.json").is_file():
        raise ValidationError(f"no fit outputs in {fit_dir}")
    panel = read_panel(cfg)
    summary, basis, fpca = outputs.read_fit_outputs(fit_dir, panel)
    if list(summary["predictor_names"]) != list(panel.predictor_names):
        raise ValidationError("fit outputs were produced from a different panel")
    pairing = None if summary["gwas_pairing"] is None else np.asarray(summary["gwas_pairing"])
    markers = summary["markers"]
    ranked = _select(panel, basis, fpca, np.asarray(summary["group_norms"]), summary["sigma2_mean"],
                     np.asarray(summary["lambdas_mean"]), pairing, cfg)
    rules = selections_both_rules(ranked, cfg.top_k)
    extra = {"top_index": rules["top"], "top": [markers[m] for m in rules["top"]],
             "manifest": base_manifest(cfg, "select", cfg.seed, started)}
    outputs.write_selection_outputs(Path(cfg.out), ranked, markers, extra)
    log.info("selected %d marker(s)", ranked.n_selected)
    return EXIT_OK


def _run_replicate(task: tuple) -> dict:
    """One simulate -> fit -> select replicate; failures are returned, not raised."""
    cfg, design, sigma, I, rep, rep_dir = task
    sim_seed, chain_seed = replicate_seeds(cfg, design, sigma, I, rep)
    rep_dir = Path(rep_dir)
    rep_dir.mkdir(parents=True, exist_ok=True)
    panel, truth = gen_panel(sim_spec(cfg, design, sigma, I, sim_seed))
    outputs.write_json(truth.to_json(), rep_dir / "truth.json")
    record = {"design": design, "sigma_eps": sigma, "I": I, "rep": rep, "truth": truth.influential}
    try:
        fit = fit_panel(panel, cfg.fit_settings(), chain_seed)
        s = fit.chain.summary
        pairing, markers = outputs.gwas_pairing_from_names(panel.predictor_names, "on")
        ranked = _select(panel, fit.basis, fit.fpca, s.group_norms, s.sigma2_mean, s.lambdas_mean,
                         pairing, cfg)
        rules = selections_both_rules(ranked, cfg.top_k)
    except NumericalError as exc:
        outputs.write_json({"error": type(exc).__name__, "message": str(exc)}, rep_dir / "failed.json")
        record["failed"] = str(exc)
        return record
    outputs.write_json({"n_selected": len(rules["bic"]), "selected_index": rules["bic"],
                        "selected": [markers[m] for m in rules["bic"]], "top_index": rules["top"],
                        "simulation_seed": sim_seed, "chain_seed": chain_seed,
                        "L": fit.fpca.L, "bic_path": ranked.bic_path.tolist()},
                       rep_dir / "selected.json")
    record.update(rules)
    return record


def aggregate(records: list[dict], p1: int) -> pd.DataFrame:
    """Metrics rows, one per setting (design, sigma, I), in sorted order."""
    by_setting: dict = {}
    for r in records:
        by_setting.setdefault((r["design"], float(r["sigma_eps"]), int(r["I"])), []).append(r)
    rows = []
    for (design, sigma, I) in sorted(by_setting):
        recs = sorted(by_setting[(design, sigma, I)], key=lambda r: r["rep"])
        ok = [r for r in recs if "failed" not in r]
        truth = recs[0]["truth"]
        setting = {"design": design, "sigma_eps": sigma, "I": I, "p1": p1}
        if ok:
            by_rule = {rule: replicate_metrics(truth, [r[rule] for r in ok], p1) for rule in ("bic", "top")}
            rows.append(outputs.metrics_row(setting, len(ok), len(recs) - len(ok), truth, by_rule))
        else:
            rows.append({**setting, "n_rep": 0, "n_failed": len(recs)})
    return pd.DataFrame(rows)


def write_metrics(df: pd.DataFrame, root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    path = root / "metrics.csv"
    outputs.write_csv(df, path)
    return path


def cmd_replicate(cfg: RunConfig, grid: str | None = None) -> int:
    started = time.perf_counter()
    root = Path(cfg.out)
    tasks = []
    for design, sigma, I in settings_grid(cfg, grid):
        for rep in range(cfg.replicates):
            tasks.append((cfg, design, sigma, I, rep, str(setting_dir(root, design, sigma, I) / f"rep_{rep}")))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_replicate, tasks))
    else:
        records = [_run_replicate(t) for t in tasks]
    df = aggregate(records, cfg.p1)
    path = write_metrics(df, root)
    man = base_manifest(cfg, "replicate", cfg.seed, started)
    man["grid"] = grid
    outputs.write_json(man, root / "manifest.json")
    n_failed = sum("failed" in r for r in records)
    log.info("wrote %s (%d replicate(s), %d failed)", path, len(records), n_failed)
    if n_failed:
        raise PartialFailure(f"{n_failed} of {len(records)} replicate(s) failed")
    return EXIT_OK


def cmd_summarize(cfg: RunConfig) -> int:
    root = Path(cfg.out)
    records, p1s = [], set()
    for truth_path in sorted(root.rglob("truth.json")):
        d = truth_path.parent
        truth = json.loads(truth_path.read_text())
        spec = truth["spec"]
        p1s.add(spec["p1"])
        rep = int(d.name.split("_")[-1]) if d.name.startswith("rep_") else 0
        rec = {"design": spec["design"], "sigma_eps": spec["sigma_eps"], "I": spec["I"], "rep": rep,
               "truth": truth["influential_markers"]}
        if (d / "selected.json").is_file():
            sel = json.loads((d / "selected.json").read_text())
            rec["bic"] = sel["selected_index"]
            rec["top"] = sel["top_index"]
        else:
            rec["failed"] = "no selection"
        records.append(rec)
    if not records:
        raise ValidationError(f"no replicate directories under {root}")
    if len(p1s) != 1:
        raise ValidationError(f"replicates mix marker counts {sorted(p1s)}")
    path = write_metrics(aggregate(records, p1s.pop()), root)
    log.info("wrote %s from %d replicate(s)", path, len(records))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with an [hdfmm] section")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--design", choices=("I", "II"), help="simulation design")
    p.add_argument("--keep-draws", action="store_true", default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key (repeatable)")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _panel_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--panel", help="directory holding curves.csv and design.csv")
    p.add_argument("--curves")
    p.add_argument("--design-csv")
    p.add_argument("--standardize-covariates", action="store_true", default=None)
    p.add_argument("--gwas", choices=("auto", "on", "off"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdfmm", description="High-dimensional functional mixed model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write simulated panels and truth records")
    _common(p)
    p.add_argument("--grid", choices=("full",), help="all eight design/sigma/I settings")
    p.add_argument("--replicates", type=int)

    p = sub.add_parser("fit", help="pilot fit, FPCA and Gibbs sampler on one panel")
    _common(p)
    _panel_args(p)
    p.add_argument("--dump-basis", action="store_true", default=None)
    p.add_argument("--dump-fpca", action="store_true", default=None)

    p = sub.add_parser("select", help="rank markers and cut by BIC")
    _common(p)
    _panel_args(p)
    p.add_argument("--fit", dest="fit_dir", help="directory written by `hdfmm fit`")

    p = sub.add_parser("replicate", help="simulate -> fit -> select over replicates")
    _common(p)
    p.add_argument("--grid", choices=("full",))
    p.add_argument("--replicates", type=int)

    p = sub.add_parser("summarize", help="rebuild metrics.csv from replicate directories")
    _common(p)
    return parser


_FLAG_KEYS = {"seed": "seed", "out": "out", "workers": "workers", "keep_draws": "keep_draws",
              "panel": "panel_dir", "curves": "curves", "design_csv": "design_file",
              "standardize_covariates": "standardize_covariates", "gwas": "gwas",
              "dump_basis": "dump_basis", "dump_fpca": "dump_fpca", "fit_dir": "fit_dir",
              "replicates": "replicates"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: dict = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if args.design is not None:
        overrides["designs"] = (args.design,)
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.grid)
        if args.command == "fit":
            return cmd_fit(cfg)
        if args.command == "select":
            return cmd_select(cfg)
        if args.command == "replicate":
            return cmd_replicate(cfg, args.grid)
        return cmd_summarize(cfg)
    except PartialFailure as exc:
        print(f"hdfmm: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except NumericalError as exc:
        print(f"hdfmm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (HdfmmError, ValueError, OSError) as exc:
        print(f"hdfmm: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
