"""Bayesian high-dimensional functional mixed model for longitudinal curves.

Fixed functional effects of many scalar predictors are expanded in a B-spline
basis and shrunk with a group lasso prior; subject-visit deviations follow a
truncated Karhunen-Loeve expansion estimated by FPCA.  Markers are ranked by
posterior group norm and cut by BIC.
"""

__version__ = "0.1.0"

from .curvedata import CurvePanel, Grid, load_panel, save_panel  # noqa: E402
from .errors import (  # noqa: E402
    ChainDiverged, DegenerateCovariance, DesignMismatch, HdfmmError, IncompleteDesign, InvalidKnots,
    InvalidSpec, IrregularGrid, NumericalError, NumericalFailure, RankDeficientBasis, ValidationError,
)
from .fpca import FpcaResult, eigendecompose_truncate, estimate_fpca, sandwich_smooth  # noqa: E402
from .gibbs import ChainResult, ChainState, PriorConfig, run_chain  # noqa: E402
from .pipeline import FitSettings, fit_panel, select_markers  # noqa: E402
from .selection import (  # noqa: E402
    RankedMarkers, bic_stepwise, choose_degree, rank_groups, replicate_metrics, select_top,
)
from .simgen import SimSpec, gen_panel, gwas_pairing  # noqa: E402
from .splinebasis import BasisSystem, build_basis  # noqa: E402

__all__ = [
    "BasisSystem", "ChainDiverged", "ChainResult", "ChainState", "CurvePanel", "DegenerateCovariance",
    "DesignMismatch", "FitSettings", "FpcaResult", "Grid", "HdfmmError", "IncompleteDesign",
    "InvalidKnots", "InvalidSpec", "IrregularGrid", "NumericalError", "NumericalFailure", "PriorConfig",
    "RankDeficientBasis", "RankedMarkers", "SimSpec", "ValidationError", "bic_stepwise", "build_basis",
    "choose_degree", "eigendecompose_truncate", "estimate_fpca", "fit_panel", "gen_panel", "gwas_pairing",
    "load_panel", "rank_groups", "replicate_metrics", "run_chain", "sandwich_smooth", "save_panel",
    "select_markers", "select_top",
]
