"""Reduced-basis stochastic collocation with adaptive anchored ANOVA."""

__version__ = "0.1.0"
