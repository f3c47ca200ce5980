"""Run drivers: sparse grid, fixed PCM-ANOVA, adaptive PCM-ANOVA."""

from .report import LevelSummary, RunAborted, RunReport, TermSummary
from .runs import AdaptiveConfig, candidate_sets, run_adaptive, run_fixed_anova, run_sparse_grid

__all__ = [
    "AdaptiveConfig",
    "LevelSummary",
    "RunAborted",
    "RunReport",
    "TermSummary",
    "candidate_sets",
    "run_adaptive",
    "run_fixed_anova",
    "run_sparse_grid",
]
