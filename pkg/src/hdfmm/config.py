"""Run configuration: flat INI file (section ``[hdfmm]``) plus overrides."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ValidationError
from .gibbs import PriorConfig
from .pipeline import FitSettings

SECTION = "hdfmm"


@dataclass(frozen=True)
class RunConfig:
    # data
    curves: str | None = None
    design_file: str | None = None
    panel_dir: str | None = None
    fit_dir: str | None = None
    out: str = "out"
    standardize_covariates: bool = False
    gwas: str = "auto"  # auto | on | off
    # simulation
    designs: tuple[str, ...] = ("I",)
    n_subjects: tuple[int, ...] = (100,)
    sigmas: tuple[float, ...] = (1.0,)
    p1: int = 3000
    J: int = 5
    K: int = 50
    null: bool = False
    replicates: int = 1
    # basis / fpca
    degree: int = 3
    n_interior_knots: int = 1
    tau_total: float = 0.90
    tau_incr: float = 0.01
    fixed_L: int | None = None
    smoother_dim: int | None = None
    cov_source: str = "within"
    pilot_ridge: float = 1e-4
    # chain
    n_burn: int = 1000
    n_keep: int = 1000
    sigma2_rule: str = "joint"
    alpha1R: float = 0.01
    alpha2R: float = 0.01
    alpha1l: float = 0.01
    alpha2l: float = 0.01
    Sigma_cr_scale: float = 1.0
    # selection
    max_markers: int | None = 50
    top_k: int = 5
    # orchestration
    seed: int = 0
    workers: int = 1
    keep_draws: bool = False
    dump_basis: bool = False
    dump_fpca: bool = False

    def __post_init__(self):
        for name in ("p1", "J", "K", "replicates", "degree", "n_keep", "workers", "top_k"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.n_burn < 0 or self.n_interior_knots < 0:
            raise ValidationError("n_burn and n_interior_knots must be non-negative")
        if not 0 < self.tau_incr < self.tau_total <= 1:
            raise ValidationError("thresholds must satisfy 0 < tau_incr < tau_total <= 1")
        if any(d not in ("I", "II") for d in self.designs):
            raise ValidationError(f"designs must be I or II, got {self.designs}")
        if any(n < 1 for n in self.n_subjects) or any(s < 0 for s in self.sigmas):
            raise ValidationError("n_subjects must be positive and sigmas non-negative")
        if self.gwas not in ("auto", "on", "off"):
            raise ValidationError("gwas must be auto, on or off")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        PriorConfig(self.alpha1R, self.alpha2R, self.alpha1l, self.alpha2l, self.Sigma_cr_scale)

    def priors(self) -> PriorConfig:
        return PriorConfig(self.alpha1R, self.alpha2R, self.alpha1l, self.alpha2l, self.Sigma_cr_scale)

    def fit_settings(self) -> FitSettings:
        return FitSettings(
            degree=self.degree, n_interior_knots=self.n_interior_knots, tau_total=self.tau_total,
            tau_incr=self.tau_incr, fixed_L=self.fixed_L, smoother_dim=self.smoother_dim,
            cov_source=self.cov_source, pilot_ridge=self.pilot_ridge, n_burn=self.n_burn,
            n_keep=self.n_keep, sigma2_rule=self.sigma2_rule, priors=self.priors(),
            max_markers=self.max_markers, top_k=self.top_k,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def hash(self, exclude=("out", "workers")) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in exclude}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    if name not in _FIELD_TYPES:
        raise ValidationError(f"unknown configuration key {name!r}")
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    if "None" in kind and raw.lower() in ("", "none"):
        return None
    try:
        if kind.startswith("tuple[int"):
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if kind.startswith("tuple[float"):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if kind.startswith("tuple[str"):
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if kind.startswith("bool"):
            low = raw.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ValidationError(f"bad value for {name}: {raw!r}") from exc


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read ``[hdfmm]`` key-value pairs from ``path`` then apply string overrides."""
    values: dict = {}
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        if not parser.read(Path(path)):
            raise ValidationError(f"cannot read config file {path}")
        if parser.has_section(SECTION):
            for key, raw in parser.items(SECTION):
                values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    return replace(RunConfig(), **values)
