"""Collocation rules, sparse grids, ANOVA point sets and Halton samples."""

from .anova_points import AnovaPointSet, anova_points, count_points
from .halton import halton
from .rules import Rule1D, clenshaw_curtis, gauss_legendre, make_rule
from .sparse_grid import PointSet, sparse_grid

__all__ = [
    "AnovaPointSet",
    "PointSet",
    "Rule1D",
    "anova_points",
    "clenshaw_curtis",
    "count_points",
    "gauss_legendre",
    "halton",
    "make_rule",
    "sparse_grid",
]
