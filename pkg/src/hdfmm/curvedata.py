"""Bilevel curve panels: data model plus CSV ingestion and export.

Two files describe a panel.  The curves file is long format with header
``subject,visit,grid_index,t,y``; the design file has a ``subject`` column
followed by role-tagged columns ``<name>:x`` (penalized predictor),
``<name>:w`` (unpenalized covariate) or ``<name>:wc`` (continuous
covariate, eligible for standardization).  The intercept is implicit.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import DesignMismatch, IncompleteDesign, IrregularGrid, ValidationError

CURVES_SCHEMA = "hdfmm.curves/1"
DESIGN_SCHEMA = "hdfmm.design/1"
CURVES_FILE = "curves.csv"
DESIGN_FILE = "design.csv"

_ROLE_TAGS = ("x", "w", "wc")


@dataclass(frozen=True, eq=False)
class Grid:
    """Shared, equispaced evaluation grid on [0, 1]."""

    t: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise IrregularGrid("grid must be a non-empty 1-d sequence")
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise IrregularGrid("grid points must lie in [0, 1]")
        if t.size > 1:
            step = np.diff(t)
            if np.any(step <= 0):
                raise IrregularGrid("grid must be strictly increasing")
            h = (t[-1] - t[0]) / (t.size - 1)
            # relative tolerance plus a few ulps of absolute slack for rounded grids
            if np.max(np.abs(step - h)) > max(1e-12 * h, 4 * np.finfo(float).eps):
                raise IrregularGrid("grid is not equispaced")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def K(self) -> int:
        return self.t.size

    @classmethod
    def midpoints(cls, K: int) -> "Grid":
        """Midpoint grid t_k = (k - 0.5)/K used for synthetic data."""
        if K < 1:
            raise ValidationError("K must be positive")
        return cls((np.arange(1, K + 1) - 0.5) / K)

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.t, other.t)


@dataclass(frozen=True, eq=False)
class CurvePanel:
    """Balanced bilevel functional responses with their design.

    ``Y[i, j, k]`` is visit ``j`` of subject ``i`` at grid point ``k``.
    ``W`` carries the intercept in column 0 followed by the covariates.
    """

    Y: np.ndarray
    X: np.ndarray
    W: np.ndarray
    grid: Grid
    predictor_names: tuple[str, ...] = ()
    covariate_names: tuple[str, ...] = ()
    covariate_tags: tuple[str, ...] = ()
    subject_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        Y = np.array(self.Y, dtype=float)  # private copy, frozen below
        if Y.ndim != 3:
            raise ValidationError("Y must be indexed (subject, visit, grid point)")
        I, J, K = Y.shape
        if K != self.grid.K:
            raise ValidationError(f"Y has {K} grid points but grid has {self.grid.K}")
        if not np.all(np.isfinite(Y)):
            raise IncompleteDesign("Y contains non-finite cells")
        X = np.array(self.X, dtype=float).reshape(I, -1)
        W = np.array(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != I or W.shape[1] < 1:
            raise ValidationError("W must be I x q with q >= 1")
        if not np.all(W[:, 0] == 1.0):
            raise ValidationError("first column of W must be the intercept (all ones)")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(W))):
            raise ValidationError("design contains non-finite values")
        p, q = X.shape[1], W.shape[1]
        names = tuple(self.predictor_names) or tuple(f"x{m + 1}" for m in range(p))
        cnames = tuple(self.covariate_names) or tuple(f"w{r + 1}" for r in range(q - 1))
        tags = tuple(self.covariate_tags) or ("wc",) * (q - 1)
        if len(names) != p or len(cnames) != q - 1 or len(tags) != q - 1:
            raise ValidationError("name/tag counts do not match the design")
        if any(tag not in ("w", "wc") for tag in tags):
            raise ValidationError(f"covariate tags must be 'w' or 'wc', got {tags}")
        sids = tuple(str(s) for s in self.subject_ids) or tuple(str(i) for i in range(I))
        if len(sids) != I or len(set(sids)) != I:
            raise ValidationError("subject_ids must be I distinct labels")
        for arr in (Y, X, W):
            arr.setflags(write=False)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "predictor_names", names)
        object.__setattr__(self, "covariate_names", cnames)
        object.__setattr__(self, "covariate_tags", tags)
        object.__setattr__(self, "subject_ids", sids)

    @property
    def I(self) -> int:  # noqa: E743
        return self.Y.shape[0]

    @property
    def J(self) -> int:
        return self.Y.shape[1]

    @property
    def K(self) -> int:
        return self.Y.shape[2]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.W.shape[1]

    def __eq__(self, other):
        if not isinstance(other, CurvePanel):
            return NotImplemented
        return (
            np.array_equal(self.Y, other.Y)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.W, other.W)
            and self.grid == other.grid
            and self.predictor_names == other.predictor_names
            and self.covariate_names == other.covariate_names
            and self.covariate_tags == other.covariate_tags
            and self.subject_ids == other.subject_ids
        )

    def with_standardized_covariates(self) -> "CurvePanel":
        """Return a copy with every ``wc`` covariate centered and scaled to unit SD."""
        W = self.W.copy()
        for r, tag in enumerate(self.covariate_tags, start=1):
            if tag == "wc":
                sd = W[:, r].std()
                W[:, r] = W[:, r] - W[:, r].mean()
                if sd > 0:
                    W[:, r] /= sd
        return CurvePanel(
            self.Y, self.X, W, self.grid, self.predictor_names,
            self.covariate_names, self.covariate_tags, self.subject_ids,
        )


def _read_csv(path: Path, **kw) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", float_precision="round_trip", **kw)


def load_panel(curves_path, design_path) -> CurvePanel:
    """Read and validate a panel from its curves and design CSV files.

    Subjects keep the order in which they first appear in the curves file;
    visits are re-indexed per subject in first-appearance order.
    """
    curves = _read_csv(Path(curves_path), dtype={"subject": str, "visit": str})
    expected = ["subject", "visit", "grid_index", "t", "y"]
    if list(curves.columns) != expected:
        raise ValidationError(f"curves header must be {','.join(expected)}, got {list(curves.columns)}")
    design = _read_csv(Path(design_path), dtype={"subject": str})
    if len(design.columns) == 0 or design.columns[0] != "subject":
        raise ValidationError("design file must start with a 'subject' column")

    subj_codes, subjects = pd.factorize(curves["subject"], sort=False)
    I = len(subjects)

    # visits: dense per-subject index in first-appearance order
    visit_codes = np.empty(len(curves), dtype=np.int64)
    n_visits = np.zeros(I, dtype=np.int64)
    rows_by_subject = pd.Series(np.arange(len(curves))).groupby(subj_codes).indices
    for i in range(I):
        idx = rows_by_subject[i]
        codes, uniq = pd.factorize(curves["visit"].to_numpy()[idx], sort=False)
        visit_codes[idx] = codes
        n_visits[i] = len(uniq)
    if np.any(n_visits != n_visits[0]):
        raise IncompleteDesign("unbalanced design: subjects have different visit counts")
    J = int(n_visits[0])

    gidx = curves["grid_index"].to_numpy()
    grid_values, grid_codes = np.unique(gidx, return_inverse=True)
    K = grid_values.size
    t_by_k = np.full(K, np.nan)
    t_by_k[grid_codes] = curves["t"].to_numpy(dtype=float)
    t_check = t_by_k[grid_codes]
    if not np.array_equal(t_check, curves["t"].to_numpy(dtype=float)):
        raise IrregularGrid("grid_index maps to inconsistent t values")
    grid = Grid(t_by_k)

    flat = (subj_codes * J + visit_codes) * K + grid_codes
    if len(curves) != I * J * K or np.unique(flat).size != I * J * K:
        raise IncompleteDesign(f"expected {I * J * K} distinct (i,j,k) cells, found {np.unique(flat).size} in {len(curves)} rows")
    Y = np.empty(I * J * K)
    Y[flat] = curves["y"].to_numpy(dtype=float)
    Y = Y.reshape(I, J, K)

    design_subjects = design["subject"].to_numpy()
    if len(set(design_subjects)) != len(design_subjects):
        raise DesignMismatch("duplicate subject rows in design file")
    missing = set(subjects) ^ set(design_subjects)
    if missing:
        raise DesignMismatch(f"subjects not present in both files: {sorted(missing)[:5]}")
    design = design.set_index("subject").loc[list(subjects)]

    pred_names, cov_names, cov_tags = [], [], []
    x_cols, w_cols = [], []
    for col in design.columns:
        name, sep, tag = col.rpartition(":")
        if not sep or tag not in _ROLE_TAGS or not name:
            raise ValidationError(f"design column {col!r} lacks a role tag (:x, :w, :wc)")
        if tag == "x":
            pred_names.append(name)
            x_cols.append(col)
        else:
            cov_names.append(name)
            cov_tags.append(tag)
            w_cols.append(col)
    X = design[x_cols].to_numpy(dtype=float) if x_cols else np.zeros((I, 0))
    W = np.column_stack([np.ones(I)] + [design[c].to_numpy(dtype=float) for c in w_cols])
    return CurvePanel(Y, X, W, grid, tuple(pred_names), tuple(cov_names), tuple(cov_tags), tuple(subjects))


def save_panel(panel: CurvePanel, directory) -> tuple[Path, Path]:
    """Write ``curves.csv`` and ``design.csv`` under ``directory``.

    Rows are ordered by subject, then visit, then grid point; floats are
    written with shortest round-trip precision so a reload is bit-exact.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    I, J, K = panel.Y.shape
    n = I * J * K
    # int64 indices: the largest real-data panel (421 x 25 x 910) needs ~1e7 rows
    ii = np.repeat(np.arange(I, dtype=np.int64), J * K)
    jj = np.tile(np.repeat(np.arange(J, dtype=np.int64), K), I)
    kk = np.tile(np.arange(K, dtype=np.int64), I * J)
    curves = pd.DataFrame(
        {
            "subject": np.asarray(panel.subject_ids, dtype=object)[ii],
            "visit": jj,
            "grid_index": kk,
            "t": panel.grid.t[kk],
            "y": panel.Y.reshape(n),
        }
    )
    design = pd.DataFrame({"subject": list(panel.subject_ids)})
    for r, (name, tag) in enumerate(zip(panel.covariate_names, panel.covariate_tags), start=1):
        design[f"{name}:{tag}"] = panel.W[:, r]
    if panel.p:
        xdf = pd.DataFrame(panel.X, columns=[f"{name}:x" for name in panel.predictor_names])
        design = pd.concat([design, xdf], axis=1)

    curves_path, design_path = out / CURVES_FILE, out / DESIGN_FILE
    _write_csv(curves, curves_path, CURVES_SCHEMA)
    _write_csv(design, design_path, DESIGN_SCHEMA)
    return curves_path, design_path


def _write_csv(df: pd.DataFrame, path: Path, schema: str) -> None:
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    df.to_csv(buf, index=False, lineterminator="\n")
    path.write_text(buf.getvalue(), encoding="utf-8")


def subject_means(panel: CurvePanel) -> np.ndarray:
    """Visit-averaged curves, shape (I, K)."""
    return panel.Y.mean(axis=1)


def panel_from_arrays(Y, X=None, covariates=None, grid: Grid | None = None,
                      predictor_names: Sequence[str] = (), covariate_names: Sequence[str] = ()) -> CurvePanel:
    """Convenience constructor that prepends the intercept column."""
    Y = np.asarray(Y, dtype=float)
    I, _, K = Y.shape
    X = np.zeros((I, 0)) if X is None else np.asarray(X, dtype=float).reshape(I, -1)
    cov = np.zeros((I, 0)) if covariates is None else np.asarray(covariates, dtype=float).reshape(I, -1)
    W = np.column_stack([np.ones(I), cov])
    return CurvePanel(Y, X, W, grid or Grid.midpoints(K), tuple(predictor_names), tuple(covariate_names))
