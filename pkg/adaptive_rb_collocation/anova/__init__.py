"""Anchored ANOVA decomposition."""

from .decomposition import (
    AnovaState,
    AnovaStructureError,
    AnovaTerm,
    anchored_term,
    combination_coefficients,
    combine_moments,
    format_label,
    indicator,
    kappa,
    saturation,
    term_mean,
)

__all__ = [
    "AnovaState",
    "AnovaStructureError",
    "AnovaTerm",
    "anchored_term",
    "combination_coefficients",
    "combine_moments",
    "format_label",
    "indicator",
    "kappa",
    "saturation",
    "term_mean",
]
